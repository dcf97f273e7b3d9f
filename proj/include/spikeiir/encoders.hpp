// Analog-to-spike conversion plus the synthetic pattern generator and the
// noise model used by the associative-memory experiments.
//
// Every stochastic step consumes its own Rng seeded by the caller and draws
// in a fixed scan order (channel-major, time inner), so results are
// reproducible bit-exactly. Stages whose parameter is zero consume no
// randomness at all.
#pragma once

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <stdexcept>
#include <vector>

#include "spikeiir/rng.hpp"
#include "spikeiir/spike_tensor.hpp"

namespace spikeiir {

struct RateEncodeConfig {
  int horizon = 0;
  enum class Mode { bernoulli, deterministic };
  Mode mode = Mode::bernoulli;
  double max_rate = 1.0;  // spikes per step for a channel at full value
  std::uint64_t seed = 0;
};

// Turns normalized intensities into spike trains whose rate is proportional
// to the value: either independent per-step Bernoulli draws, or (RNG-free)
// the rounded count of spikes placed at evenly spaced steps.
inline SpikeTensor rate_encode(const Eigen::VectorXd& values,
                               const RateEncodeConfig& cfg) {
  if (cfg.horizon <= 0)
    throw std::invalid_argument("rate_encode: horizon must be positive");
  if (!(cfg.max_rate > 0.0) || cfg.max_rate > 1.0)
    throw std::invalid_argument("rate_encode: max_rate must be in (0, 1]");
  const int channels = static_cast<int>(values.size());
  for (int c = 0; c < channels; ++c)
    if (!(values[c] >= 0.0) || values[c] > 1.0)
      throw std::invalid_argument("rate_encode: values must lie in [0, 1]");

  SpikeTensor out(cfg.horizon, channels);
  if (cfg.mode == RateEncodeConfig::Mode::bernoulli) {
    Rng rng(cfg.seed);
    for (int c = 0; c < channels; ++c) {
      const double p = values[c] * cfg.max_rate;
      for (int t = 0; t < cfg.horizon; ++t)
        if (rng.bernoulli(p)) out.set(t, c, true);
    }
  } else {
    for (int c = 0; c < channels; ++c) {
      const long n = std::lround(values[c] * cfg.max_rate * cfg.horizon);
      for (long k = 0; k < n; ++k) {
        const int t = static_cast<int>((k + 0.5) * cfg.horizon / n);
        out.set(t, c, true);
      }
    }
  }
  return out;
}

struct CurrentLifEncoderConfig {
  Eigen::VectorXd gain;  // per channel; scales the analog value into current
  double v_th = 1.0;
  double leak = 0.0;     // membrane carry-over per step
  double theta = 0.0;    // reset-trace decay
  int horizon = 0;       // 0 = use the series length
};

// Per-channel gain making a channel's peak value drive about half a spike
// per step (rate ~ gain*x / v_th for a leak-free, fast-reset unit).
inline Eigen::VectorXd auto_encoder_gain(const Eigen::MatrixXd& series,
                                         double v_th = 1.0) {
  Eigen::VectorXd g(series.cols());
  for (int c = 0; c < series.cols(); ++c) {
    const double peak = series.col(c).cwiseAbs().maxCoeff();
    g[c] = peak > 0.0 ? 0.5 * v_th / peak : 0.0;
  }
  return g;
}

// Leaky integrator driven directly by the analog series (rows = time steps,
// columns = channels), spiking through the same threshold/reset mechanism as
// the network neurons:
//   R[t] = theta*R[t-1] + O[t-1]
//   V[t] = leak*V[t-1] + gain*x[t] - v_th*R[t]
//   O[t] = 1 when V[t] >= v_th.
inline SpikeTensor current_lif_encode(const Eigen::MatrixXd& series,
                                      const CurrentLifEncoderConfig& cfg) {
  if (!series.allFinite())
    throw std::invalid_argument("current_lif_encode: series must be finite");
  const int channels = static_cast<int>(series.cols());
  if (cfg.gain.size() != channels)
    throw std::invalid_argument("current_lif_encode: gain size mismatch");
  const int steps = static_cast<int>(series.rows());
  const int horizon = cfg.horizon > 0 ? cfg.horizon : steps;

  SpikeTensor out(horizon, channels);
  for (int c = 0; c < channels; ++c) {
    double v = 0.0, r = 0.0;
    double o_prev = 0.0;
    for (int t = 0; t < horizon; ++t) {
      const double x = t < steps ? series(t, c) : 0.0;
      r = cfg.theta * r + o_prev;
      v = cfg.leak * v + cfg.gain[c] * x - cfg.v_th * r;
      o_prev = v - cfg.v_th >= 0.0 ? 1.0 : 0.0;
      if (o_prev != 0.0) out.set(t, c, true);
    }
  }
  return out;
}

// Random spatial-temporal target patterns: independent Bernoulli spikes at
// pattern_rate, redrawn (with a fresh derived seed) in the vanishingly rare
// event two patterns coincide.
inline std::vector<SpikeTensor> gen_patterns(int n_patterns, int channels,
                                             int horizon, double pattern_rate,
                                             std::uint64_t seed) {
  if (!(pattern_rate > 0.0) || !(pattern_rate < 1.0))
    throw std::invalid_argument("gen_patterns: pattern_rate must be in (0, 1)");
  if (n_patterns < 0 || channels <= 0 || horizon <= 0)
    throw std::invalid_argument("gen_patterns: bad shape");
  std::vector<SpikeTensor> patterns;
  patterns.reserve(n_patterns);
  for (int k = 0; k < n_patterns; ++k) {
    for (std::uint64_t attempt = 0;; ++attempt) {
      Rng rng(derive_seed(seed, "pattern", static_cast<std::uint64_t>(k),
                          attempt));
      SpikeTensor p(horizon, channels);
      for (int c = 0; c < channels; ++c)
        for (int t = 0; t < horizon; ++t)
          if (rng.bernoulli(pattern_rate)) p.set(t, c, true);
      bool duplicate = false;
      for (const SpikeTensor& q : patterns)
        if (q == p) { duplicate = true; break; }
      if (!duplicate) {
        patterns.push_back(std::move(p));
        break;
      }
    }
  }
  return patterns;
}

struct OcclusionMask {
  // Half-open ranges: channels [channel_begin, channel_end), steps
  // [t_begin, t_end).
  int channel_begin = 0, channel_end = 0;
  int t_begin = 0, t_end = 0;
};

struct NoiseModel {
  double jitter_sigma = 0.0;     // std-dev of Gaussian timing shift, in steps
  double delete_prob = 0.0;      // per-spike drop probability
  double background_rate = 0.0;  // per-cell Bernoulli spikes OR-ed in
  std::vector<OcclusionMask> occlusions;
  std::uint64_t seed = 0;
};

// Applies, in order: occlusion zeroing, per-spike deletion, per-spike
// Gaussian timing jitter (rounded to the nearest step, ties to even; shifts
// landing outside [0, T) drop the spike; collisions merge), then background
// spikes OR-ed over every cell. Output remains strictly binary.
inline SpikeTensor corrupt(const SpikeTensor& pattern,
                           const NoiseModel& noise) {
  const int horizon = pattern.horizon();
  const int channels = pattern.channels();
  SpikeTensor work = pattern;

  for (const OcclusionMask& m : noise.occlusions)
    for (int c = std::max(0, m.channel_begin);
         c < std::min(channels, m.channel_end); ++c)
      for (int t = std::max(0, m.t_begin); t < std::min(horizon, m.t_end); ++t)
        work.set(t, c, false);

  if (noise.delete_prob > 0.0) {
    Rng rng(derive_seed(noise.seed, "delete"));
    for (int c = 0; c < channels; ++c)
      for (int t = 0; t < horizon; ++t)
        if (work.at(t, c) && rng.bernoulli(noise.delete_prob))
          work.set(t, c, false);
  }

  if (noise.jitter_sigma > 0.0) {
    Rng rng(derive_seed(noise.seed, "jitter"));
    SpikeTensor jittered(horizon, channels);
    for (int c = 0; c < channels; ++c)
      for (int t = 0; t < horizon; ++t) {
        if (!work.at(t, c)) continue;
        const double shifted = t + rng.normal(0.0, noise.jitter_sigma);
        const double landed = std::nearbyint(shifted);
        if (landed >= 0.0 && landed < horizon)
          jittered.set(static_cast<int>(landed), c, true);
      }
    work = std::move(jittered);
  }

  if (noise.background_rate > 0.0) {
    Rng rng(derive_seed(noise.seed, "background"));
    for (int c = 0; c < channels; ++c)
      for (int t = 0; t < horizon; ++t)
        if (rng.bernoulli(noise.background_rate)) work.set(t, c, true);
  }

  return work;
}

}  // namespace spikeiir
