// Bias-corrected Adam over all trainable parameters: weight matrices plus
// the coefficients of filters flagged trainable. Filter updates are followed
// by the radial pole clamp so a step can never leave a recursion unstable.
#pragma once

#include <Eigen/Dense>

#include <cmath>
#include <cstdint>
#include <iostream>
#include <stdexcept>

#include "spikeiir/backward.hpp"
#include "spikeiir/network.hpp"

namespace spikeiir {

struct AdamParams {
  double lr = 1e-4;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double eps = 1e-8;
};

struct AdamState {
  AdamParams hyper;
  std::int64_t step = 0;
  Gradients m;  // first moments, same shapes as the gradients
  Gradients v;  // second moments

  static AdamState init(const NetworkSpec& net, AdamParams hyper = {}) {
    AdamState s;
    s.hyper = hyper;
    s.m = Gradients::zeros_like(net);
    s.v = Gradients::zeros_like(net);
    return s;
  }
};

namespace detail {
// In-place Adam update of one parameter array. bc1/bc2 are the
// bias-correction denominators 1 - beta^step.
template <typename ParamArray, typename GradArray, typename MomentArray>
void adam_update(ParamArray&& param, GradArray&& grad, MomentArray&& m,
                 MomentArray&& v, const AdamParams& h, double bc1, double bc2) {
  m = h.beta1 * m + (1.0 - h.beta1) * grad;
  v = h.beta2 * v + (1.0 - h.beta2) * grad.square();
  param -= h.lr * (m / bc1) / ((v / bc2).sqrt() + h.eps);
}
}  // namespace detail

// Applies one optimizer step in place. Returns how many trainable filters
// needed a pole clamp afterward (normally zero; logged when not).
inline int adam_step(NetworkSpec& net, const Gradients& grads,
                     AdamState& opt) {
  if (grads.d_weights.size() != net.layers.size())
    throw std::invalid_argument("adam_step: gradient/network layer mismatch");
  opt.step += 1;
  const AdamParams& h = opt.hyper;
  const double bc1 = 1.0 - std::pow(h.beta1, static_cast<double>(opt.step));
  const double bc2 = 1.0 - std::pow(h.beta2, static_cast<double>(opt.step));

  int clamped = 0;
  for (size_t l = 0; l < net.layers.size(); ++l) {
    LayerSpec& layer = net.layers[l];
    if (grads.d_weights[l].rows() != layer.weights.rows() ||
        grads.d_weights[l].cols() != layer.weights.cols())
      throw std::invalid_argument("adam_step: weight shape mismatch");
    detail::adam_update(layer.weights.array(), grads.d_weights[l].array(),
                        opt.m.d_weights[l].array(), opt.v.d_weights[l].array(),
                        h, bc1, bc2);

    for (size_t j = 0; j < layer.filters.size(); ++j) {
      if (!grads.d_filters[l][j]) continue;
      FilterCoeffs& fc = layer.filters[j];
      const FilterGrads& fg = *grads.d_filters[l][j];
      FilterGrads& fm = *opt.m.d_filters[l][j];
      FilterGrads& fv = *opt.v.d_filters[l][j];
      detail::adam_update(fc.feedback.array(), fg.d_feedback.array(),
                          fm.d_feedback.array(), fv.d_feedback.array(), h,
                          bc1, bc2);
      detail::adam_update(fc.feedforward.array(), fg.d_feedforward.array(),
                          fm.d_feedforward.array(), fv.d_feedforward.array(),
                          h, bc1, bc2);
      if (clamp_poles(fc)) ++clamped;
    }
  }
  if (clamped > 0)
    std::clog << "adam_step: pole clamp applied to " << clamped
              << " filter(s) at step " << opt.step << "\n";
  return clamped;
}

}  // namespace spikeiir
