// Sample plumbing between loaders, encoders and the training loop.
//
// A SampleSource materializes one training item at a time, so raw datasets
// (e.g. images kept as bytes) are encoded on the fly instead of storing every
// spike train. The epoch_seed argument lets stochastic encoders resample each
// epoch while staying reproducible; deterministic sources ignore it.
#pragma once

#include <Eigen/Dense>

#include <cstdint>
#include <functional>
#include <memory>
#include <numeric>
#include <stdexcept>
#include <utility>
#include <variant>
#include <vector>

#include "spikeiir/encoders.hpp"
#include "spikeiir/rng.hpp"
#include "spikeiir/spike_tensor.hpp"

namespace spikeiir {

// One dataset element as loaded from disk or synthesized: input either still
// analog (vector per sample, or time-major matrix for series) or already a
// spike train; label either a class index or a target spike train.
struct LabeledSample {
  std::variant<Eigen::VectorXd, Eigen::MatrixXd, SpikeTensor> input;
  std::variant<int, SpikeTensor> label;
};

// One fully materialized training example: spike input as a dense
// channels x T matrix plus either a class index or a target train.
struct TrainItem {
  Eigen::MatrixXd input;
  std::variant<int, Eigen::MatrixXd> target;
};

struct SampleSource {
  int count = 0;
  std::function<TrainItem(int index, std::uint64_t epoch_seed)> get;
};

// Seeded Fisher-Yates permutation of 0..n-1, swapping from the top index
// down so the draw sequence is well defined.
inline std::vector<int> shuffle_indices(int n, std::uint64_t seed) {
  std::vector<int> idx(n);
  std::iota(idx.begin(), idx.end(), 0);
  Rng rng(seed);
  for (int i = n - 1; i > 0; --i) {
    const int j = static_cast<int>(rng.below(static_cast<std::uint64_t>(i) + 1));
    std::swap(idx[i], idx[j]);
  }
  return idx;
}

// Classification over analog vectors, rate-encoded on access. In bernoulli
// mode each (epoch, sample) pair gets its own derived seed.
inline SampleSource make_rate_encoded_source(
    std::shared_ptr<const std::vector<LabeledSample>> samples,
    RateEncodeConfig cfg) {
  SampleSource src;
  src.count = static_cast<int>(samples->size());
  src.get = [samples = std::move(samples), cfg](
                int index, std::uint64_t epoch_seed) -> TrainItem {
    const LabeledSample& s = (*samples)[index];
    RateEncodeConfig local = cfg;
    local.seed = derive_seed(epoch_seed, "rate_encode",
                             static_cast<std::uint64_t>(index));
    SpikeTensor spikes =
        rate_encode(std::get<Eigen::VectorXd>(s.input), local);
    return TrainItem{spikes.to_matrix(), std::get<int>(s.label)};
  };
  return src;
}

// Samples whose inputs and labels are already spike trains (association
// tasks: corrupted input, clean target).
inline SampleSource make_spike_pair_source(
    std::shared_ptr<const std::vector<LabeledSample>> samples) {
  SampleSource src;
  src.count = static_cast<int>(samples->size());
  src.get = [samples = std::move(samples)](int index,
                                           std::uint64_t) -> TrainItem {
    const LabeledSample& s = (*samples)[index];
    return TrainItem{std::get<SpikeTensor>(s.input).to_matrix(),
                     std::get<SpikeTensor>(s.label).to_matrix()};
  };
  return src;
}

// Classification over spike-train inputs (pre-encoded datasets).
inline SampleSource make_spike_class_source(
    std::shared_ptr<const std::vector<LabeledSample>> samples) {
  SampleSource src;
  src.count = static_cast<int>(samples->size());
  src.get = [samples = std::move(samples)](int index,
                                           std::uint64_t) -> TrainItem {
    const LabeledSample& s = (*samples)[index];
    return TrainItem{std::get<SpikeTensor>(s.input).to_matrix(),
                     std::get<int>(s.label)};
  };
  return src;
}

// Classification over analog time series, run through the integrating
// encoder on access (deterministic, epoch seed unused).
inline SampleSource make_series_encoded_source(
    std::shared_ptr<const std::vector<LabeledSample>> samples,
    CurrentLifEncoderConfig cfg) {
  SampleSource src;
  src.count = static_cast<int>(samples->size());
  src.get = [samples = std::move(samples), cfg](int index,
                                                std::uint64_t) -> TrainItem {
    const LabeledSample& s = (*samples)[index];
    SpikeTensor spikes =
        current_lif_encode(std::get<Eigen::MatrixXd>(s.input), cfg);
    return TrainItem{spikes.to_matrix(), std::get<int>(s.label)};
  };
  return src;
}

}  // namespace spikeiir
