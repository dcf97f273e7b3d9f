// Versioned binary snapshot of a training run: network parameters, optimizer
// state, RNG seed and epoch counter. Everything is written little-endian with
// doubles as raw IEEE-754 bits, so save/load round-trips are bit-exact and
// byte streams compare equal across runs.
#pragma once

#include <Eigen/Dense>

#include <cstdint>
#include <stdexcept>
#include <string>
#include <vector>

#include "spikeiir/adam.hpp"
#include "spikeiir/binio.hpp"
#include "spikeiir/network.hpp"

namespace spikeiir {

inline constexpr char kCheckpointMagic[8] = {'S', 'P', 'I', 'K',
                                             'E', 'I', 'I', 'R'};
inline constexpr std::uint32_t kCheckpointVersion = 1;

struct Checkpoint {
  std::uint32_t version = kCheckpointVersion;
  NetworkSpec net;
  AdamState opt;
  std::uint64_t seed = 0;
  std::int64_t epoch = 0;
};

namespace detail {

inline void put_matrix(binio::Writer& w, const Eigen::MatrixXd& m) {
  for (int i = 0; i < m.rows(); ++i)
    for (int j = 0; j < m.cols(); ++j) w.f64le(m(i, j));
}

inline void put_vector(binio::Writer& w, const Eigen::VectorXd& v) {
  w.u64le(static_cast<std::uint64_t>(v.size()));
  for (int i = 0; i < v.size(); ++i) w.f64le(v[i]);
}

inline void get_matrix(binio::Reader& r, Eigen::MatrixXd& m) {
  for (int i = 0; i < m.rows(); ++i)
    for (int j = 0; j < m.cols(); ++j) m(i, j) = r.f64le();
}

// Guards a length field against nonsense before any allocation happens.
inline std::size_t checked_count(binio::Reader& r, std::uint64_t n,
                                 const char* what) {
  if (n > (r.bytes.size() - r.pos) / 8)
    throw std::runtime_error(r.context + ": corrupt " + what +
                             " count at byte offset " + std::to_string(r.pos) +
                             " (" + std::to_string(n) + ")");
  return static_cast<std::size_t>(n);
}

inline Eigen::VectorXd get_vector(binio::Reader& r, const char* what) {
  const std::size_t n = checked_count(r, r.u64le(), what);
  Eigen::VectorXd v(n);
  for (std::size_t i = 0; i < n; ++i) v[i] = r.f64le();
  return v;
}

inline void put_gradients(binio::Writer& w, const Gradients& g) {
  for (std::size_t l = 0; l < g.d_weights.size(); ++l) {
    put_matrix(w, g.d_weights[l]);
    for (const auto& fg : g.d_filters[l])
      if (fg) {
        put_vector(w, fg->d_feedback);
        put_vector(w, fg->d_feedforward);
      }
  }
}

inline Gradients get_gradients(binio::Reader& r, const NetworkSpec& net) {
  Gradients g = Gradients::zeros_like(net);
  for (std::size_t l = 0; l < g.d_weights.size(); ++l) {
    get_matrix(r, g.d_weights[l]);
    for (auto& fg : g.d_filters[l])
      if (fg) {
        fg->d_feedback = get_vector(r, "moment feedback");
        fg->d_feedforward = get_vector(r, "moment feedforward");
      }
  }
  return g;
}

}  // namespace detail

inline std::vector<std::uint8_t> checkpoint_bytes(const Checkpoint& ckpt) {
  binio::Writer w;
  w.raw(kCheckpointMagic, sizeof kCheckpointMagic);
  w.u32le(kCheckpointVersion);
  w.u64le(ckpt.seed);
  w.i64le(ckpt.epoch);

  w.u64le(ckpt.net.layers.size());
  for (const LayerSpec& layer : ckpt.net.layers) {
    w.u64le(static_cast<std::uint64_t>(layer.n_out()));
    w.u64le(static_cast<std::uint64_t>(layer.n_in()));
    w.f64le(layer.neuron.lambda);
    w.f64le(layer.neuron.theta);
    w.f64le(layer.neuron.v_th);
    w.f64le(layer.neuron.sigma);
    detail::put_matrix(w, layer.weights);
    for (const FilterCoeffs& fc : layer.filters) {
      w.u8(fc.trainable ? 1 : 0);
      w.f64le(fc.gain);
      detail::put_vector(w, fc.feedback);
      detail::put_vector(w, fc.feedforward);
    }
  }

  w.f64le(ckpt.opt.hyper.lr);
  w.f64le(ckpt.opt.hyper.beta1);
  w.f64le(ckpt.opt.hyper.beta2);
  w.f64le(ckpt.opt.hyper.eps);
  w.i64le(ckpt.opt.step);
  detail::put_gradients(w, ckpt.opt.m);
  detail::put_gradients(w, ckpt.opt.v);
  return std::move(w.bytes);
}

inline Checkpoint checkpoint_from_bytes(const std::vector<std::uint8_t>& bytes,
                                        const std::string& context) {
  binio::Reader r{bytes, 0, context};
  const std::uint8_t* magic = r.raw(sizeof kCheckpointMagic);
  for (std::size_t i = 0; i < sizeof kCheckpointMagic; ++i)
    if (magic[i] != static_cast<std::uint8_t>(kCheckpointMagic[i]))
      throw std::runtime_error(context + ": not a checkpoint file (bad magic)");
  const std::uint32_t version = r.u32le();
  if (version != kCheckpointVersion)
    throw std::runtime_error(
        context + ": unsupported checkpoint version " +
        std::to_string(version) + " (supported: " +
        std::to_string(kCheckpointVersion) + ")");

  Checkpoint ckpt;
  ckpt.version = version;
  ckpt.seed = r.u64le();
  ckpt.epoch = r.i64le();

  const std::size_t n_layers = detail::checked_count(r, r.u64le(), "layer");
  ckpt.net.layers.resize(n_layers);
  for (LayerSpec& layer : ckpt.net.layers) {
    const std::size_t n_out = detail::checked_count(r, r.u64le(), "row");
    const std::size_t n_in = detail::checked_count(r, r.u64le(), "column");
    layer.neuron.lambda = r.f64le();
    layer.neuron.theta = r.f64le();
    layer.neuron.v_th = r.f64le();
    layer.neuron.sigma = r.f64le();
    if (n_out == 0 || n_in == 0 || n_out * n_in > (r.bytes.size() - r.pos) / 8)
      throw std::runtime_error(context + ": corrupt layer shape at byte offset " +
                               std::to_string(r.pos));
    layer.weights.resize(n_out, n_in);
    detail::get_matrix(r, layer.weights);
    layer.filters.resize(n_in);
    for (FilterCoeffs& fc : layer.filters) {
      fc.trainable = r.u8() != 0;
      fc.gain = r.f64le();
      fc.feedback = detail::get_vector(r, "feedback");
      fc.feedforward = detail::get_vector(r, "feedforward");
    }
  }

  ckpt.opt.hyper.lr = r.f64le();
  ckpt.opt.hyper.beta1 = r.f64le();
  ckpt.opt.hyper.beta2 = r.f64le();
  ckpt.opt.hyper.eps = r.f64le();
  ckpt.opt.step = r.i64le();
  ckpt.opt.m = detail::get_gradients(r, ckpt.net);
  ckpt.opt.v = detail::get_gradients(r, ckpt.net);
  r.expect_end();
  return ckpt;
}

inline void save_checkpoint(const Checkpoint& ckpt, const std::string& path) {
  binio::write_file(path, checkpoint_bytes(ckpt));
}

inline Checkpoint load_checkpoint(const std::string& path) {
  return checkpoint_from_bytes(binio::read_file(path), path);
}

}  // namespace spikeiir
