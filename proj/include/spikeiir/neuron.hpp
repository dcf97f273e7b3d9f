// Neuron-level scalar pieces: parameters of the membrane/reset recursions,
// the hard threshold, and the smooth stand-ins used for its gradient.
#pragma once

#include <cmath>
#include <numbers>
#include <stdexcept>

namespace spikeiir {

struct NeuronParams {
  double lambda = 0.0;                 // membrane leak, per step
  double theta = 0.7788007830714049;   // reset-trace decay, per step (e^{-1/4})
  double v_th = 1.0;                   // firing threshold
  double sigma = 0.4;                  // surrogate noise scale, in v_th units
};

inline void validate_neuron(const NeuronParams& p) {
  if (!(p.lambda >= 0.0 && p.lambda < 1.0))
    throw std::invalid_argument("neuron: lambda must be in [0, 1)");
  if (!(p.theta >= 0.0 && p.theta < 1.0))
    throw std::invalid_argument("neuron: theta must be in [0, 1)");
  if (!(p.v_th > 0.0)) throw std::invalid_argument("neuron: v_th must be > 0");
  if (!(p.sigma > 0.0)) throw std::invalid_argument("neuron: sigma must be > 0");
}

// Hard threshold; fires exactly at v == v_th.
inline double spike(double v, double v_th) { return v - v_th >= 0.0 ? 1.0 : 0.0; }

// Probability that a noisy membrane at v crosses threshold in one step;
// equals 1/2 at v == v_th and is the smooth forward used in soft mode.
inline double spike_probability(double v, const NeuronParams& p) {
  return 0.5 * std::erfc((p.v_th - v) / (std::numbers::sqrt2 * p.sigma));
}

// d spike_probability / dv: a Gaussian bump centered on the threshold. Used
// in place of the threshold derivative in the backward pass.
inline double surrogate_grad(double v, const NeuronParams& p) {
  const double z = (p.v_th - v) / p.sigma;
  return std::exp(-0.5 * z * z) /
         (std::sqrt(2.0 * std::numbers::pi) * p.sigma);
}

}  // namespace spikeiir
