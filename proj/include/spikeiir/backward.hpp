// Reverse-mode differentiation of the exact unrolled forward recurrences.
// The hard threshold's derivative is replaced by the Gaussian surrogate; in
// soft mode the recorded forward is itself smooth, so the result here is the
// true gradient and can be checked against finite differences.
//
// Within a layer the adjoints propagate backward in time through three
// couplings: the membrane self-loop (lambda), the reset loop (theta, and the
// spike feeding R one step later), and the synapse filter feedback. Across
// layers they propagate through the weights and through every feed-forward
// tap of the downstream filters, so one output spike can receive error from
// several later time steps.
#pragma once

#include <Eigen/Dense>

#include <cassert>
#include <cmath>
#include <optional>
#include <stdexcept>
#include <vector>

#include "spikeiir/network.hpp"

namespace spikeiir {

struct FilterGrads {
  Eigen::VectorXd d_feedback;     // length P
  Eigen::VectorXd d_feedforward;  // length Q+1
};

struct Gradients {
  std::vector<Eigen::MatrixXd> d_weights;
  // [layer][input channel]; engaged only for trainable filters.
  std::vector<std::vector<std::optional<FilterGrads>>> d_filters;

  static Gradients zeros_like(const NetworkSpec& net) {
    Gradients g;
    g.d_weights.reserve(net.layers.size());
    g.d_filters.resize(net.layers.size());
    for (size_t l = 0; l < net.layers.size(); ++l) {
      const LayerSpec& layer = net.layers[l];
      g.d_weights.push_back(
          Eigen::MatrixXd::Zero(layer.n_out(), layer.n_in()));
      g.d_filters[l].resize(layer.filters.size());
      for (size_t j = 0; j < layer.filters.size(); ++j) {
        const FilterCoeffs& f = layer.filters[j];
        if (f.trainable)
          g.d_filters[l][j] = FilterGrads{
              Eigen::VectorXd::Zero(f.order_p()),
              Eigen::VectorXd::Zero(f.order_q() + 1)};
      }
    }
    return g;
  }

  void add(const Gradients& other) {
    for (size_t l = 0; l < d_weights.size(); ++l) {
      d_weights[l] += other.d_weights[l];
      for (size_t j = 0; j < d_filters[l].size(); ++j)
        if (d_filters[l][j]) {
          d_filters[l][j]->d_feedback += other.d_filters[l][j]->d_feedback;
          d_filters[l][j]->d_feedforward +=
              other.d_filters[l][j]->d_feedforward;
        }
    }
  }

  void scale(double s) {
    for (size_t l = 0; l < d_weights.size(); ++l) {
      d_weights[l] *= s;
      for (auto& fg : d_filters[l])
        if (fg) {
          fg->d_feedback *= s;
          fg->d_feedforward *= s;
        }
    }
  }

  double squared_norm() const {
    double n = 0.0;
    for (size_t l = 0; l < d_weights.size(); ++l) {
      n += d_weights[l].squaredNorm();
      for (const auto& fg : d_filters[l])
        if (fg) n += fg->d_feedback.squaredNorm() + fg->d_feedforward.squaredNorm();
    }
    return n;
  }

  double global_norm() const { return std::sqrt(squared_norm()); }

  // Rescales so the global norm does not exceed max_norm; no-op otherwise.
  void clip_to_norm(double max_norm) {
    const double n = global_norm();
    if (n > max_norm && n > 0.0) scale(max_norm / n);
  }
};

inline Gradients backward(const NetworkSpec& net, const SimState& state,
                          const Eigen::MatrixXd& d_output) {
  const size_t n_layers = net.layers.size();
  if (state.layers.size() != n_layers)
    throw std::invalid_argument("backward: state does not match network");
  const int horizon = state.horizon;
  if (static_cast<int>(d_output.rows()) != net.output_channels() ||
      static_cast<int>(d_output.cols()) != horizon)
    throw std::invalid_argument("backward: loss gradient shape mismatch");

  Gradients grads = Gradients::zeros_like(net);

  // dE/dO for the layer currently being processed; starts as the loss
  // gradient on the last layer and is rebuilt for each layer below.
  Eigen::MatrixXd upper = d_output;

  for (int l = static_cast<int>(n_layers) - 1; l >= 0; --l) {
    const LayerSpec& layer = net.layers[l];
    const LayerState& ls = state.layers[l];
    const NeuronParams& p = layer.neuron;
    const int n_out = layer.n_out();
    const int n_in = layer.n_in();

    Eigen::MatrixXd eps(n_out, horizon);
    for (int t = 0; t < horizon; ++t)
      for (int i = 0; i < n_out; ++i)
        eps(i, t) = surrogate_grad(ls.v(i, t), p);

    // Temporal sweep: av (= dE/dV, equal to dE/dI) at each step.
    Eigen::MatrixXd av(n_out, horizon);
    Eigen::VectorXd av_next = Eigen::VectorXd::Zero(n_out);
    Eigen::VectorXd ar_next = Eigen::VectorXd::Zero(n_out);   // dE/dR[t+1]
    Eigen::VectorXd ar_next2 = Eigen::VectorXd::Zero(n_out);  // dE/dR[t+2]
    for (int t = horizon - 1; t >= 0; --t) {
      Eigen::VectorXd ao = upper.col(t) + ar_next;
      Eigen::VectorXd avt =
          ao.cwiseProduct(eps.col(t)) + p.lambda * av_next;
#ifndef NDEBUG
      // The membrane adjoint carried across one step must factor as
      // (lambda - v_th * eps[t]) times the incoming adjoint.
      for (int i = 0; i < n_out; ++i) {
        const double kappa = p.lambda - p.v_th * eps(i, t);
        const double expect =
            eps(i, t) * (upper(i, t) + p.theta * ar_next2[i]) +
            kappa * av_next[i];
        assert(std::abs(avt[i] - expect) <=
               1e-9 * (1.0 + std::abs(avt[i]) + std::abs(expect)));
      }
#endif
      Eigen::VectorXd art = -p.v_th * avt + p.theta * ar_next;
      av.col(t) = avt;
      av_next = std::move(avt);
      ar_next2 = ar_next;
      ar_next = std::move(art);
    }

    grads.d_weights[l] += av * ls.f.transpose();

    // Direct adjoint of every synapse trace, before filter feedback.
    Eigen::MatrixXd af_direct = layer.weights.transpose() * av;
    const Eigen::MatrixXd& in = state.layer_input(l);

    Eigen::MatrixXd lower;
    if (l > 0) lower = Eigen::MatrixXd::Zero(n_in, horizon);

    Eigen::ArrayXd af(horizon);
    for (int j = 0; j < n_in; ++j) {
      const FilterCoeffs& fc = layer.filters[j];
      const int p_ord = fc.order_p();
      const int q_ord = fc.order_q();

      // Filter feedback runs backward: trace F[t] influences F[t+p].
      for (int t = horizon - 1; t >= 0; --t) {
        double acc = af_direct(j, t);
        for (int q = 1; q <= p_ord && t + q < horizon; ++q)
          acc += fc.feedback[q - 1] * af[t + q];
        af[t] = acc;
      }

      if (grads.d_filters[l][j]) {
        FilterGrads& fg = *grads.d_filters[l][j];
        for (int q = 1; q <= p_ord; ++q) {
          double acc = 0.0;
          for (int t = q; t < horizon; ++t) acc += af[t] * ls.f(j, t - q);
          fg.d_feedback[q - 1] += acc;
        }
        for (int q = 0; q <= q_ord; ++q) {
          double acc = 0.0;
          for (int t = q; t < horizon; ++t) acc += af[t] * in(j, t - q);
          fg.d_feedforward[q] += fc.gain * acc;
        }
      }

      if (l > 0) {
        // Every feed-forward tap hands error to the upstream spike train,
        // possibly several steps in the future.
        for (int t = 0; t < horizon; ++t) {
          double acc = 0.0;
          for (int q = 0; q <= q_ord && t + q < horizon; ++q)
            acc += fc.feedforward[q] * af[t + q];
          lower(j, t) = fc.gain * acc;
        }
      }
    }

    upper = std::move(lower);
  }
  return grads;
}

}  // namespace spikeiir
