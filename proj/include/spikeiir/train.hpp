// Mini-batch training loop and evaluation. Parameters stay frozen while a
// batch's forward/backward passes run; the batch gradient is the arithmetic
// mean of per-sample gradients summed in sample-index order, so the result is
// bit-identical no matter how many worker threads execute the passes.
#pragma once

#include <Eigen/Dense>

#include <algorithm>
#include <chrono>
#include <cstdint>
#include <exception>
#include <stdexcept>
#include <thread>
#include <variant>
#include <vector>

#include "spikeiir/adam.hpp"
#include "spikeiir/backward.hpp"
#include "spikeiir/dataset.hpp"
#include "spikeiir/loss.hpp"
#include "spikeiir/network.hpp"

namespace spikeiir {

struct TrainOptions {
  int batch_size = 64;
  int threads = 1;
  double clip_norm = 0.0;  // global-norm gradient clip; 0 disables
  bool shuffle = true;
  std::uint64_t seed = 0;
};

struct EpochRecord {
  int epoch = 0;
  double loss = 0.0;    // mean per-sample loss
  double metric = 0.0;  // accuracy, or mean filtered-trace distance
  double seconds = 0.0;
};

using TrainRecord = std::vector<EpochRecord>;

inline LossValue compute_loss(const Eigen::MatrixXd& output,
                              const TrainItem& item, const LossKind& kind) {
  if (kind.kind == LossKind::Kind::rate_cross_entropy)
    return rate_loss(output, std::get<int>(item.target));
  return van_rossum_loss(output, std::get<Eigen::MatrixXd>(item.target),
                         kind.kernel);
}

// Predicted class: channel with the highest spike count, ties going to the
// lowest index.
inline int classify_predict(const Eigen::MatrixXd& output) {
  Eigen::VectorXd counts = output.rowwise().sum();
  int best = 0;
  for (int i = 1; i < static_cast<int>(counts.size()); ++i)
    if (counts[i] > counts[best]) best = i;
  return best;
}

namespace detail {

struct SampleOutcome {
  double loss = 0.0;
  double metric = 0.0;
  Gradients grads;
};

inline SampleOutcome run_sample(const NetworkSpec& net, const TrainItem& item,
                                const LossKind& kind) {
  SimState state = network_forward_recorded(net, item.input, SpikeMode::hard);
  const Eigen::MatrixXd& out = state.layers.back().o;
  LossValue lv = compute_loss(out, item, kind);
  SampleOutcome r;
  r.loss = lv.loss;
  r.metric = kind.kind == LossKind::Kind::rate_cross_entropy
                 ? (classify_predict(out) == std::get<int>(item.target) ? 1.0
                                                                        : 0.0)
                 : lv.loss;
  r.grads = backward(net, state, lv.d_output);
  return r;
}

// Runs fn(k) for k in [0, n) on `threads` workers (inline when 1). Worker
// exceptions are captured and rethrown on the caller.
template <typename Fn>
void parallel_for(int n, int threads, Fn&& fn) {
  if (threads <= 1 || n <= 1) {
    for (int k = 0; k < n; ++k) fn(k);
    return;
  }
  const int n_workers = std::min(threads, n);
  std::vector<std::exception_ptr> errors(n_workers);
  std::vector<std::thread> pool;
  pool.reserve(n_workers);
  for (int w = 0; w < n_workers; ++w)
    pool.emplace_back([&, w] {
      try {
        for (int k = w; k < n; k += n_workers) fn(k);
      } catch (...) {
        errors[w] = std::current_exception();
      }
    });
  for (auto& th : pool) th.join();
  for (auto& e : errors)
    if (e) std::rethrow_exception(e);
}

}  // namespace detail

// One pass over the dataset: per batch, forward+backward every sample
// against the frozen parameters, average the gradients, then take a single
// optimizer step. Returns the epoch's mean loss/metric and wall time.
inline EpochRecord train_epoch(NetworkSpec& net, const SampleSource& source,
                               const LossKind& kind, const TrainOptions& opt,
                               AdamState& adam, int epoch) {
  if (source.count <= 0)
    throw std::invalid_argument("train_epoch: empty dataset");
  if (opt.batch_size <= 0)
    throw std::invalid_argument("train_epoch: batch_size must be positive");
  const auto t_start = std::chrono::steady_clock::now();

  const std::uint64_t epoch_seed =
      derive_seed(opt.seed, "epoch", static_cast<std::uint64_t>(epoch));
  std::vector<int> order;
  if (opt.shuffle) {
    order = shuffle_indices(
        source.count,
        derive_seed(opt.seed, "shuffle", static_cast<std::uint64_t>(epoch)));
  } else {
    order.resize(source.count);
    for (int i = 0; i < source.count; ++i) order[i] = i;
  }

  double loss_sum = 0.0, metric_sum = 0.0;
  for (int start = 0; start < source.count; start += opt.batch_size) {
    const int n = std::min(opt.batch_size, source.count - start);
    Gradients batch_grads = Gradients::zeros_like(net);

    if (opt.threads <= 1) {
      for (int k = 0; k < n; ++k) {
        detail::SampleOutcome r = detail::run_sample(
            net, source.get(order[start + k], epoch_seed), kind);
        batch_grads.add(r.grads);
        loss_sum += r.loss;
        metric_sum += r.metric;
      }
    } else {
      // Per-sample slots reduced afterward in index order: the identical
      // addition sequence as the sequential path.
      std::vector<detail::SampleOutcome> slots(n);
      detail::parallel_for(n, opt.threads, [&](int k) {
        slots[k] = detail::run_sample(
            net, source.get(order[start + k], epoch_seed), kind);
      });
      for (int k = 0; k < n; ++k) {
        batch_grads.add(slots[k].grads);
        loss_sum += slots[k].loss;
        metric_sum += slots[k].metric;
      }
    }

    batch_grads.scale(1.0 / n);
    if (opt.clip_norm > 0.0) batch_grads.clip_to_norm(opt.clip_norm);
    adam_step(net, batch_grads, adam);
  }

  EpochRecord rec;
  rec.epoch = epoch;
  rec.loss = loss_sum / source.count;
  rec.metric = metric_sum / source.count;
  rec.seconds =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - t_start)
          .count();
  return rec;
}

struct EvalResult {
  double loss = 0.0;    // mean per-sample loss
  double metric = 0.0;  // accuracy, or mean filtered-trace distance
  int count = 0;
};

// Forward-only pass over the dataset in index order.
inline EvalResult evaluate(const NetworkSpec& net, const SampleSource& source,
                           const LossKind& kind, std::uint64_t seed = 0,
                           int threads = 1) {
  if (source.count <= 0) throw std::invalid_argument("evaluate: empty dataset");
  const std::uint64_t eval_seed = derive_seed(seed, "eval");
  std::vector<double> losses(source.count), metrics(source.count);
  detail::parallel_for(source.count, threads, [&](int k) {
    TrainItem item = source.get(k, eval_seed);
    Eigen::MatrixXd out = network_forward_matrix(net, item.input);
    LossValue lv = compute_loss(out, item, kind);
    losses[k] = lv.loss;
    metrics[k] = kind.kind == LossKind::Kind::rate_cross_entropy
                     ? (classify_predict(out) == std::get<int>(item.target)
                            ? 1.0
                            : 0.0)
                     : lv.loss;
  });
  EvalResult r;
  r.count = source.count;
  for (int k = 0; k < source.count; ++k) {
    r.loss += losses[k];
    r.metric += metrics[k];
  }
  r.loss /= source.count;
  r.metric /= source.count;
  return r;
}

}  // namespace spikeiir
