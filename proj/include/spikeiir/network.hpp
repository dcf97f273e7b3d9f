// Discrete-time forward simulation of layered spiking networks. Each layer
// runs, per step t,
//
//   F_j[t] = synapse filter of the layer input, one state per input channel
//   I_i[t] = sum_j W_ij F_j[t]
//   R_i[t] = theta R_i[t-1] + O_i[t-1]
//   V_i[t] = lambda V_i[t-1] + I_i[t] - v_th R_i[t]
//   O_i[t] = U(V_i[t] - v_th)
//
// with all state at t < 0 zero. Synapse state is kept per input channel,
// not per (neuron, channel) pair: every synapse fed by the same axon sees
// the same spike history, so the states coincide.
#pragma once

#include <Eigen/Dense>

#include <cmath>
#include <stdexcept>
#include <vector>

#include "spikeiir/filter.hpp"
#include "spikeiir/neuron.hpp"
#include "spikeiir/rng.hpp"
#include "spikeiir/spike_tensor.hpp"

namespace spikeiir {

struct LayerSpec {
  Eigen::MatrixXd weights;           // n_out x n_in
  std::vector<FilterCoeffs> filters; // one per input channel
  NeuronParams neuron;

  int n_in() const { return static_cast<int>(weights.cols()); }
  int n_out() const { return static_cast<int>(weights.rows()); }
};

inline void validate_layer(const LayerSpec& layer) {
  if (layer.weights.size() == 0)
    throw std::invalid_argument("layer: empty weight matrix");
  if (static_cast<int>(layer.filters.size()) != layer.n_in())
    throw std::invalid_argument("layer: need one filter per input channel");
  for (const auto& f : layer.filters) validate_filter(f);
  validate_neuron(layer.neuron);
}

// Dense layer with weights drawn uniformly from ±1/sqrt(n_in), filled in
// (row, column) order so a seed pins the exact matrix, and one copy of the
// prototype filter per input channel.
inline LayerSpec make_dense_layer(int n_out, int n_in,
                                  const FilterCoeffs& filter_proto,
                                  const NeuronParams& neuron, Rng& rng) {
  if (n_out <= 0 || n_in <= 0)
    throw std::invalid_argument("make_dense_layer: sizes must be positive");
  LayerSpec layer;
  layer.weights.resize(n_out, n_in);
  const double bound = 1.0 / std::sqrt(static_cast<double>(n_in));
  for (int i = 0; i < n_out; ++i)
    for (int j = 0; j < n_in; ++j)
      layer.weights(i, j) = rng.uniform(-bound, bound);
  layer.filters.assign(n_in, filter_proto);
  layer.neuron = neuron;
  return layer;
}

struct NetworkSpec {
  std::vector<LayerSpec> layers;

  int input_channels() const { return layers.front().n_in(); }
  int output_channels() const { return layers.back().n_out(); }
};

inline void validate_network(const NetworkSpec& net) {
  if (net.layers.empty()) throw std::invalid_argument("network: no layers");
  for (size_t l = 0; l < net.layers.size(); ++l) {
    validate_layer(net.layers[l]);
    if (l > 0 && net.layers[l].n_in() != net.layers[l - 1].n_out())
      throw std::invalid_argument("network: layer width mismatch");
  }
}

// Forward flavor: hard emits binary spikes; soft replaces the threshold with
// the continuous spike probability, which makes the whole unrolled graph
// differentiable (used by gradient-check tests only).
enum class SpikeMode { hard, soft };

// All per-layer trajectories over the horizon; matrices are channel-major
// with one column per time step.
struct LayerState {
  Eigen::MatrixXd f;  // n_in  x T  synapse traces
  Eigen::MatrixXd i;  // n_out x T  weighted input
  Eigen::MatrixXd r;  // n_out x T  reset trace
  Eigen::MatrixXd v;  // n_out x T  membrane potential
  Eigen::MatrixXd o;  // n_out x T  spikes (binary in hard mode)
};

struct SimState {
  Eigen::MatrixXd input;  // n_0 x T, the network input drive
  std::vector<LayerState> layers;
  int horizon = 0;
  SpikeMode mode = SpikeMode::hard;

  // Drive seen by layer l's synapse filters.
  const Eigen::MatrixXd& layer_input(size_t l) const {
    return l == 0 ? input : layers[l - 1].o;
  }
};

inline LayerState layer_forward(const LayerSpec& layer,
                                const Eigen::MatrixXd& in,
                                SpikeMode mode = SpikeMode::hard) {
  if (static_cast<int>(in.rows()) != layer.n_in())
    throw std::invalid_argument("layer_forward: input channel count mismatch");
  const int horizon = static_cast<int>(in.cols());
  const int n_in = layer.n_in();
  const int n_out = layer.n_out();
  const NeuronParams& p = layer.neuron;

  LayerState s;
  s.f.resize(n_in, horizon);
  for (int j = 0; j < n_in; ++j)
    s.f.row(j) = apply_filter(layer.filters[j], in.row(j).transpose()).transpose();

  s.i = layer.weights * s.f;

  s.r.resize(n_out, horizon);
  s.v.resize(n_out, horizon);
  s.o.resize(n_out, horizon);
  for (int t = 0; t < horizon; ++t) {
    if (t == 0) {
      s.r.col(t).setZero();
      s.v.col(t) = s.i.col(t);
    } else {
      s.r.col(t) = p.theta * s.r.col(t - 1) + s.o.col(t - 1);
      s.v.col(t) = p.lambda * s.v.col(t - 1) + s.i.col(t) - p.v_th * s.r.col(t);
    }
    if (mode == SpikeMode::hard) {
      for (int i = 0; i < n_out; ++i) s.o(i, t) = spike(s.v(i, t), p.v_th);
    } else {
      for (int i = 0; i < n_out; ++i) s.o(i, t) = spike_probability(s.v(i, t), p);
    }
  }
  return s;
}

// Full-state forward pass; keeps every trajectory, as the backward pass
// needs the whole horizon.
inline SimState network_forward_recorded(const NetworkSpec& net,
                                         const Eigen::MatrixXd& input,
                                         SpikeMode mode = SpikeMode::hard) {
  if (static_cast<int>(input.rows()) != net.input_channels())
    throw std::invalid_argument("network_forward: input channel count mismatch");
  SimState state;
  state.input = input;
  state.horizon = static_cast<int>(input.cols());
  state.mode = mode;
  state.layers.reserve(net.layers.size());
  for (size_t l = 0; l < net.layers.size(); ++l) {
    const Eigen::MatrixXd& drive = state.layer_input(l);
    state.layers.push_back(layer_forward(net.layers[l], drive, mode));
  }
  return state;
}

// Spike-out-only forward; keeps just the previous layer's output alive.
inline Eigen::MatrixXd network_forward_matrix(const NetworkSpec& net,
                                              const Eigen::MatrixXd& input) {
  if (static_cast<int>(input.rows()) != net.input_channels())
    throw std::invalid_argument("network_forward: input channel count mismatch");
  Eigen::MatrixXd current = input;
  for (const auto& layer : net.layers)
    current = layer_forward(layer, current, SpikeMode::hard).o;
  return current;
}

inline SpikeTensor network_forward(const NetworkSpec& net,
                                   const SpikeTensor& input) {
  return SpikeTensor::from_matrix(network_forward_matrix(net, input.to_matrix()));
}

}  // namespace spikeiir
