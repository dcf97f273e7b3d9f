// Shared helpers for the unit and acceptance suites: network construction
// shortcuts, the soft-mode loss pipeline and the central-finite-difference
// gradient oracle that checks every weight and filter coefficient.
#pragma once

#include <Eigen/Dense>

#include <cmath>
#include <cstdint>
#include <string>
#include <variant>
#include <vector>

#include "spikeiir/backward.hpp"
#include "spikeiir/loss.hpp"
#include "spikeiir/network.hpp"
#include "spikeiir/rng.hpp"
#include "spikeiir/train.hpp"

namespace testsupport {

using spikeiir::FilterCoeffs;
using spikeiir::Gradients;
using spikeiir::LossKind;
using spikeiir::NetworkSpec;
using spikeiir::NeuronParams;
using spikeiir::Rng;
using spikeiir::SpikeMode;

using Target = std::variant<int, Eigen::MatrixXd>;

inline NetworkSpec make_net(const std::vector<int>& sizes,
                            const FilterCoeffs& proto,
                            const NeuronParams& neuron, std::uint64_t seed) {
  NetworkSpec net;
  for (std::size_t l = 0; l + 1 < sizes.size(); ++l) {
    Rng rng(spikeiir::derive_seed(seed, "weights", l));
    net.layers.push_back(spikeiir::make_dense_layer(sizes[l + 1], sizes[l],
                                                    proto, neuron, rng));
  }
  return net;
}

inline Eigen::MatrixXd random_spikes(int channels, int horizon, double rate,
                                     std::uint64_t seed) {
  Rng rng(seed);
  Eigen::MatrixXd m(channels, horizon);
  for (int c = 0; c < channels; ++c)
    for (int t = 0; t < horizon; ++t)
      m(c, t) = rng.bernoulli(rate) ? 1.0 : 0.0;
  return m;
}

inline double loss_of(const Eigen::MatrixXd& output, const Target& target,
                      const LossKind& kind) {
  if (kind.kind == LossKind::Kind::rate_cross_entropy)
    return spikeiir::rate_loss(output, std::get<int>(target)).loss;
  return spikeiir::van_rossum_loss(output, std::get<Eigen::MatrixXd>(target),
                                   kind.kernel)
      .loss;
}

// Loss of the smooth (soft-mode) forward pass; the function finite
// differences sample.
inline double soft_loss(const NetworkSpec& net, const Eigen::MatrixXd& input,
                        const Target& target, const LossKind& kind) {
  spikeiir::SimState state =
      spikeiir::network_forward_recorded(net, input, SpikeMode::soft);
  return loss_of(state.layers.back().o, target, kind);
}

inline Gradients soft_gradients(const NetworkSpec& net,
                                const Eigen::MatrixXd& input,
                                const Target& target, const LossKind& kind) {
  spikeiir::SimState state =
      spikeiir::network_forward_recorded(net, input, SpikeMode::soft);
  const Eigen::MatrixXd& out = state.layers.back().o;
  spikeiir::LossValue lv;
  if (kind.kind == LossKind::Kind::rate_cross_entropy)
    lv = spikeiir::rate_loss(out, std::get<int>(target));
  else
    lv = spikeiir::van_rossum_loss(out, std::get<Eigen::MatrixXd>(target),
                                   kind.kernel);
  return spikeiir::backward(net, state, lv.d_output);
}

struct FdReport {
  double max_rel = 0.0;
  int checked = 0;
  std::string worst;  // coordinate description of the worst mismatch
};

namespace detail {
inline void fd_compare(double analytic, double numeric, const std::string& what,
                       double floor, FdReport& report) {
  ++report.checked;
  const double scale = std::max(std::abs(analytic), std::abs(numeric));
  // Both below the noise floor: central differences can't resolve such a
  // coordinate (truncation error swamps it), so a relative comparison would
  // only amplify noise.
  if (scale < floor) return;
  const double rel = std::abs(analytic - numeric) / scale;
  if (rel > report.max_rel) {
    report.max_rel = rel;
    report.worst = what;
  }
}
}  // namespace detail

// Central finite differences over every weight and every trainable filter
// coefficient, against the reverse-mode gradients, in soft mode.
inline FdReport finite_difference_check(NetworkSpec net,
                                        const Eigen::MatrixXd& input,
                                        const Target& target,
                                        const LossKind& kind,
                                        double h = 1e-5, double floor = 1e-9) {
  const Gradients grads = soft_gradients(net, input, target, kind);
  FdReport report;

  auto probe = [&](double& param) {
    const double saved = param;
    param = saved + h;
    const double up = soft_loss(net, input, target, kind);
    param = saved - h;
    const double down = soft_loss(net, input, target, kind);
    param = saved;
    return (up - down) / (2.0 * h);
  };

  for (std::size_t l = 0; l < net.layers.size(); ++l) {
    auto& layer = net.layers[l];
    for (int i = 0; i < layer.weights.rows(); ++i)
      for (int j = 0; j < layer.weights.cols(); ++j)
        detail::fd_compare(grads.d_weights[l](i, j), probe(layer.weights(i, j)),
                           "w[" + std::to_string(l) + "](" +
                               std::to_string(i) + "," + std::to_string(j) +
                               ")",
                           floor, report);
    for (std::size_t j = 0; j < layer.filters.size(); ++j) {
      if (!grads.d_filters[l][j]) continue;
      auto& fc = layer.filters[j];
      const auto& fg = *grads.d_filters[l][j];
      for (int p = 0; p < fc.feedback.size(); ++p)
        detail::fd_compare(fg.d_feedback[p], probe(fc.feedback[p]),
                           "feedback[" + std::to_string(l) + "][" +
                               std::to_string(j) + "][" + std::to_string(p) +
                               "]",
                           floor, report);
      for (int q = 0; q < fc.feedforward.size(); ++q)
        detail::fd_compare(fg.d_feedforward[q], probe(fc.feedforward[q]),
                           "feedforward[" + std::to_string(l) + "][" +
                               std::to_string(j) + "][" + std::to_string(q) +
                               "]",
                           floor, report);
    }
  }
  return report;
}

}  // namespace testsupport
