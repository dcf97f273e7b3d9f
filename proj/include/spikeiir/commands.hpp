// Command implementations behind the CLI: training with curve/checkpoint
// artifacts, evaluation, analysis matrices (per-neuron rate map, pairwise
// spike-train distances), synthetic dataset generation and dataset encoding.
//
// Artifact CSVs format floating-point values with std::to_chars (shortest
// round-trip form, locale-independent) so identical runs produce identical
// bytes; wall-clock timings go to a separate file for the same reason.
#pragma once

#include <Eigen/Dense>

#include <algorithm>
#include <charconv>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <memory>
#include <numeric>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include "json.hpp"
#include "spikeiir/checkpoint.hpp"
#include "spikeiir/config.hpp"
#include "spikeiir/csv_series.hpp"
#include "spikeiir/dataset.hpp"
#include "spikeiir/idx.hpp"
#include "spikeiir/loss.hpp"
#include "spikeiir/network.hpp"
#include "spikeiir/spike_file.hpp"
#include "spikeiir/train.hpp"

namespace spikeiir {

namespace detail {

inline std::string fmt_double(double v) {
  char buf[32];
  const auto [ptr, ec] = std::to_chars(buf, buf + sizeof buf, v);
  if (ec != std::errc{}) throw std::runtime_error("number formatting failed");
  return std::string(buf, ptr);
}

inline std::ofstream open_out(const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out)
    throw std::runtime_error("cannot open output file: " + path.string());
  return out;
}

}  // namespace detail

// ---- spike-directory datasets (written by gen-data, read by train/eval) ----

struct SpikeDirData {
  int horizon = 0;
  int channels = 0;
  std::uint64_t seed = 0;
  std::vector<SpikeTensor> clean;  // indexed by class
  struct Item {
    SpikeTensor spikes;
    int cls = 0;
  };
  std::vector<Item> train, test;
};

inline SpikeDirData load_spike_dir(const std::string& dir) {
  const std::filesystem::path root(dir);
  const std::filesystem::path manifest_path = root / "manifest.json";
  std::ifstream in(manifest_path);
  if (!in)
    throw std::runtime_error("cannot open dataset manifest: " +
                             manifest_path.string());
  nlohmann::json j;
  try {
    in >> j;
  } catch (const nlohmann::json::exception& e) {
    throw std::runtime_error(manifest_path.string() + ": " + e.what());
  }
  if (j.value("format", "") != "spike_dataset")
    throw std::runtime_error(manifest_path.string() +
                             ": not a spike dataset manifest");

  SpikeDirData data;
  data.horizon = j.at("horizon").get<int>();
  data.channels = j.at("channels").get<int>();
  data.seed = j.at("seed").get<std::uint64_t>();
  const int n_classes = j.at("n_patterns").get<int>();
  data.clean.resize(n_classes);
  std::vector<bool> seen(n_classes, false);

  for (const auto& item : j.at("items")) {
    const std::string file = item.at("file").get<std::string>();
    const int cls = item.at("class").get<int>();
    const std::string role = item.at("role").get<std::string>();
    if (cls < 0 || cls >= n_classes)
      throw std::runtime_error(manifest_path.string() +
                               ": class out of range for " + file);
    SpikeTensor spikes = load_spikes((root / file).string());
    if (spikes.horizon() != data.horizon || spikes.channels() != data.channels)
      throw std::runtime_error(manifest_path.string() + ": " + file +
                               " shape differs from manifest header");
    if (role == "clean") {
      data.clean[cls] = std::move(spikes);
      seen[cls] = true;
    } else if (role == "train") {
      data.train.push_back({std::move(spikes), cls});
    } else if (role == "test") {
      data.test.push_back({std::move(spikes), cls});
    } else {
      throw std::runtime_error(manifest_path.string() + ": unknown role '" +
                               role + "' for " + file);
    }
  }
  for (int k = 0; k < n_classes; ++k)
    if (!seen[k])
      throw std::runtime_error(manifest_path.string() +
                               ": missing clean pattern for class " +
                               std::to_string(k));
  return data;
}

// ---- data loading per config -----------------------------------------------

namespace detail {

struct LoadedData {
  SampleSource train;
  SampleSource test;
  // Class of each test sample, in source order (analysis commands group by
  // class); empty when untracked.
  std::vector<int> test_classes;
  // Kept alive for association analysis (clean targets by class).
  std::shared_ptr<SpikeDirData> spike_dir;
};

inline SampleSource samples_to_source(
    std::vector<LabeledSample>&& samples, const RunConfig& cfg,
    const Eigen::VectorXd* series_gain /* csv only */) {
  auto shared = std::make_shared<const std::vector<LabeledSample>>(
      std::move(samples));
  if (cfg.encoder.kind == "rate") {
    if (cfg.encoder.horizon <= 0)
      throw std::runtime_error(
          "config: field 'encoder.horizon' must be set for rate encoding");
    RateEncodeConfig rc;
    rc.horizon = cfg.encoder.horizon;
    rc.mode = cfg.encoder.mode == "deterministic"
                  ? RateEncodeConfig::Mode::deterministic
                  : RateEncodeConfig::Mode::bernoulli;
    rc.max_rate = cfg.encoder.max_rate;
    return make_rate_encoded_source(std::move(shared), rc);
  }
  if (cfg.encoder.kind == "current_lif") {
    CurrentLifEncoderConfig ec;
    ec.gain = *series_gain;
    ec.v_th = cfg.neuron.v_th;
    ec.leak = cfg.encoder.leak;
    ec.theta = cfg.encoder.theta;
    ec.horizon = cfg.encoder.horizon;
    return make_series_encoded_source(std::move(shared), ec);
  }
  throw std::runtime_error(
      "config: field 'encoder.kind' must name an encoder for analog data");
}

inline void apply_limit(std::vector<LabeledSample>& v, int limit) {
  if (limit > 0 && static_cast<int>(v.size()) > limit) v.resize(limit);
}

inline LoadedData load_data(const RunConfig& cfg) {
  LoadedData out;
  if (cfg.data.format == "mnist_idx") {
    std::vector<LabeledSample> train =
        load_mnist_idx(cfg.data.train_images, cfg.data.train_labels);
    apply_limit(train, cfg.data.limit);
    std::vector<LabeledSample> test =
        load_mnist_idx(cfg.data.test_images, cfg.data.test_labels);
    apply_limit(test, cfg.data.test_limit);
    out.test_classes.reserve(test.size());
    for (const auto& s : test) out.test_classes.push_back(std::get<int>(s.label));
    out.train = samples_to_source(std::move(train), cfg, nullptr);
    out.test = samples_to_source(std::move(test), cfg, nullptr);
    return out;
  }

  if (cfg.data.format == "spike_dir") {
    auto data = std::make_shared<SpikeDirData>(load_spike_dir(cfg.data.dir));
    const bool associate = cfg.task == "associate";
    auto build = [&](const std::vector<SpikeDirData::Item>& items, int limit) {
      std::vector<LabeledSample> samples;
      const int n = limit > 0
                        ? std::min<int>(limit, static_cast<int>(items.size()))
                        : static_cast<int>(items.size());
      samples.reserve(n);
      for (int i = 0; i < n; ++i) {
        if (associate)
          samples.push_back(
              LabeledSample{items[i].spikes, data->clean[items[i].cls]});
        else
          samples.push_back(LabeledSample{items[i].spikes, items[i].cls});
      }
      return samples;
    };
    std::vector<LabeledSample> train = build(data->train, cfg.data.limit);
    std::vector<LabeledSample> test = build(data->test, cfg.data.test_limit);
    const int n_test = static_cast<int>(test.size());
    out.test_classes.reserve(n_test);
    for (int i = 0; i < n_test; ++i) out.test_classes.push_back(data->test[i].cls);
    auto train_shared = std::make_shared<const std::vector<LabeledSample>>(
        std::move(train));
    auto test_shared =
        std::make_shared<const std::vector<LabeledSample>>(std::move(test));
    if (associate) {
      out.train = make_spike_pair_source(std::move(train_shared));
      out.test = make_spike_pair_source(std::move(test_shared));
    } else {
      out.train = make_spike_class_source(std::move(train_shared));
      out.test = make_spike_class_source(std::move(test_shared));
    }
    out.spike_dir = std::move(data);
    return out;
  }

  if (cfg.data.format == "csv") {
    std::vector<LabeledSample> all = load_csv_series(
        cfg.data.path, CsvSchema{cfg.data.sample_column, cfg.data.label_column});
    const int n_train = std::max(
        1, static_cast<int>(all.size() * cfg.data.train_fraction));
    std::vector<LabeledSample> train(all.begin(), all.begin() + n_train);
    std::vector<LabeledSample> test(all.begin() + n_train, all.end());
    if (test.empty()) test = train;  // tiny datasets: eval on the train split
    apply_limit(train, cfg.data.limit);
    apply_limit(test, cfg.data.test_limit);

    const NormStats stats = compute_norm_stats(train);
    auto normalize = [&](std::vector<LabeledSample>& v) {
      for (auto& s : v)
        s.input = apply_norm(std::get<Eigen::MatrixXd>(s.input), stats);
    };
    normalize(train);
    normalize(test);

    // Auto gain from the normalized training split's per-channel peaks.
    Eigen::VectorXd gain;
    if (cfg.encoder.gain > 0.0) {
      gain = Eigen::VectorXd::Constant(
          std::get<Eigen::MatrixXd>(train[0].input).cols(), cfg.encoder.gain);
    } else {
      Eigen::MatrixXd peaks = std::get<Eigen::MatrixXd>(train[0].input)
                                  .cwiseAbs()
                                  .colwise()
                                  .maxCoeff();
      for (const auto& s : train)
        peaks = peaks.cwiseMax(std::get<Eigen::MatrixXd>(s.input)
                                   .cwiseAbs()
                                   .colwise()
                                   .maxCoeff());
      gain.resize(peaks.cols());
      for (int c = 0; c < peaks.cols(); ++c)
        gain[c] = peaks(0, c) > 0.0 ? 0.5 * cfg.neuron.v_th / peaks(0, c) : 0.0;
    }

    out.test_classes.reserve(test.size());
    for (const auto& s : test) out.test_classes.push_back(std::get<int>(s.label));
    out.train = samples_to_source(std::move(train), cfg, &gain);
    out.test = samples_to_source(std::move(test), cfg, &gain);
    return out;
  }

  throw std::runtime_error("config: field 'data.format' is required here");
}

}  // namespace detail

// ---- train ------------------------------------------------------------------

inline int cmd_train(const RunConfig& cfg,
                     const std::string& resume_checkpoint = "") {
  std::filesystem::create_directories(cfg.out_dir);
  detail::LoadedData data = detail::load_data(cfg);
  const LossKind loss = build_loss(cfg.loss);

  NetworkSpec net;
  AdamState opt;
  std::uint64_t seed = cfg.seed;
  int first_epoch = 0;
  if (!resume_checkpoint.empty()) {
    Checkpoint ckpt = load_checkpoint(resume_checkpoint);
    net = std::move(ckpt.net);
    opt = std::move(ckpt.opt);
    seed = ckpt.seed;
    first_epoch = static_cast<int>(ckpt.epoch);
    validate_network(net);
  } else {
    net = build_network(cfg);
    opt = AdamState::init(net, AdamParams{cfg.optimizer.lr, cfg.optimizer.beta1,
                                          cfg.optimizer.beta2,
                                          cfg.optimizer.eps});
  }

  TrainOptions topt;
  topt.batch_size = cfg.batch_size;
  topt.threads = cfg.threads;
  topt.clip_norm = cfg.optimizer.clip_norm;
  topt.seed = seed;

  TrainRecord record;
  for (int epoch = first_epoch; epoch < cfg.epochs; ++epoch) {
    EpochRecord rec = train_epoch(net, data.train, loss, topt, opt, epoch);
    record.push_back(rec);
    std::cout << "epoch " << rec.epoch << " loss " << rec.loss << " metric "
              << rec.metric << " (" << rec.seconds << "s)\n";
  }

  const std::filesystem::path out(cfg.out_dir);
  {
    std::ofstream curve = detail::open_out(out / "train_curve.csv");
    curve << "epoch,loss,metric\n";
    for (const EpochRecord& r : record)
      curve << r.epoch << ',' << detail::fmt_double(r.loss) << ','
            << detail::fmt_double(r.metric) << '\n';
  }
  {
    std::ofstream timing = detail::open_out(out / "train_timing.csv");
    timing << "epoch,seconds\n";
    for (const EpochRecord& r : record)
      timing << r.epoch << ',' << detail::fmt_double(r.seconds) << '\n';
  }

  Checkpoint ckpt;
  ckpt.net = std::move(net);
  ckpt.opt = std::move(opt);
  ckpt.seed = seed;
  ckpt.epoch = cfg.epochs;
  save_checkpoint(ckpt, (out / "checkpoint.bin").string());
  return 0;
}

// ---- eval -------------------------------------------------------------------

inline int cmd_eval(const RunConfig& cfg, const std::string& checkpoint_path,
                    const std::string& split = "test") {
  std::filesystem::create_directories(cfg.out_dir);
  Checkpoint ckpt = load_checkpoint(checkpoint_path);
  validate_network(ckpt.net);
  detail::LoadedData data = detail::load_data(cfg);
  const SampleSource& source = split == "train" ? data.train : data.test;
  if (source.count > 0 &&
      source.get(0, 0).input.rows() != ckpt.net.input_channels())
    throw std::runtime_error("eval: checkpoint expects " +
                             std::to_string(ckpt.net.input_channels()) +
                             " input channels, dataset provides " +
                             std::to_string(source.get(0, 0).input.rows()));
  const LossKind loss = build_loss(cfg.loss);
  EvalResult r = evaluate(ckpt.net, source, loss, cfg.seed, cfg.threads);

  std::ofstream out =
      detail::open_out(std::filesystem::path(cfg.out_dir) / "metrics.csv");
  out << "count,loss,metric\n"
      << r.count << ',' << detail::fmt_double(r.loss) << ','
      << detail::fmt_double(r.metric) << '\n';
  std::cout << "eval " << split << ": count " << r.count << " loss " << r.loss
            << " metric " << r.metric << "\n";
  return 0;
}

// ---- analysis commands -------------------------------------------------------

namespace detail {

// Materializes the requested split, ordered by class (stable within class),
// and runs each sample forward, returning the chosen layer's spike output.
struct LayerResponses {
  std::vector<Eigen::MatrixXd> outputs;  // per sample: n_neurons x T
  std::vector<int> classes;              // aligned, ascending
};

inline LayerResponses layer_responses(const NetworkSpec& net,
                                      const LoadedData& data,
                                      const std::string& split, int layer,
                                      int limit, std::uint64_t seed) {
  if (layer < 0 || layer >= static_cast<int>(net.layers.size()))
    throw std::runtime_error("layer index " + std::to_string(layer) +
                             " out of range (network has " +
                             std::to_string(net.layers.size()) + " layers)");
  const SampleSource& source = split == "train" ? data.train : data.test;
  const std::vector<int>* classes =
      split == "train" ? nullptr : &data.test_classes;

  int n = source.count;
  if (limit > 0) n = std::min(n, limit);
  std::vector<int> order(n);
  std::iota(order.begin(), order.end(), 0);
  if (classes && static_cast<int>(classes->size()) >= n)
    std::stable_sort(order.begin(), order.end(), [&](int a, int b) {
      return (*classes)[a] < (*classes)[b];
    });

  LayerResponses out;
  out.outputs.reserve(n);
  out.classes.reserve(n);
  const std::uint64_t eval_seed = derive_seed(seed, "eval");
  for (int k = 0; k < n; ++k) {
    const int idx = order[k];
    TrainItem item = source.get(idx, eval_seed);
    Eigen::MatrixXd current = item.input;
    for (int l = 0; l <= layer; ++l)
      current = layer_forward(net.layers[l], current, SpikeMode::hard).o;
    out.outputs.push_back(std::move(current));
    out.classes.push_back(
        classes && idx < static_cast<int>(classes->size()) ? (*classes)[idx]
                                                           : 0);
  }
  return out;
}

inline void write_row_classes(const std::filesystem::path& path,
                              const std::vector<int>& classes) {
  std::ofstream out = open_out(path);
  out << "row,class\n";
  for (std::size_t i = 0; i < classes.size(); ++i)
    out << i << ',' << classes[i] << '\n';
}

}  // namespace detail

// Per-neuron firing rates (spikes per step) of one layer, one row per sample
// ordered by class. Row classes go to a sidecar CSV.
inline int cmd_rate_map(const RunConfig& cfg, const std::string& checkpoint_path,
                        int layer, const std::string& split = "test",
                        int limit = 0) {
  std::filesystem::create_directories(cfg.out_dir);
  Checkpoint ckpt = load_checkpoint(checkpoint_path);
  validate_network(ckpt.net);
  detail::LoadedData data = detail::load_data(cfg);
  detail::LayerResponses resp =
      detail::layer_responses(ckpt.net, data, split, layer, limit, cfg.seed);

  const std::filesystem::path out(cfg.out_dir);
  std::ofstream csv = detail::open_out(out / "rate_map.csv");
  for (const Eigen::MatrixXd& o : resp.outputs) {
    const double horizon = static_cast<double>(o.cols());
    for (int i = 0; i < o.rows(); ++i) {
      if (i) csv << ',';
      csv << detail::fmt_double(o.row(i).sum() / horizon);
    }
    csv << '\n';
  }
  detail::write_row_classes(out / "rate_map_rows.csv", resp.classes);
  std::cout << "rate map: " << resp.outputs.size() << " samples x "
            << (resp.outputs.empty() ? 0 : resp.outputs[0].rows())
            << " neurons\n";
  return 0;
}

// Symmetric pairwise distance matrix between one layer's responses across
// samples (ordered by class), using the configured smoothing kernel.
inline int cmd_distance_matrix(const RunConfig& cfg,
                               const std::string& checkpoint_path, int layer,
                               const std::string& split = "test",
                               int limit = 0) {
  std::filesystem::create_directories(cfg.out_dir);
  Checkpoint ckpt = load_checkpoint(checkpoint_path);
  validate_network(ckpt.net);
  detail::LoadedData data = detail::load_data(cfg);
  detail::LayerResponses resp =
      detail::layer_responses(ckpt.net, data, split, layer, limit, cfg.seed);
  const FilterCoeffs kernel = build_filter(cfg.loss.kernel);

  const int n = static_cast<int>(resp.outputs.size());
  Eigen::MatrixXd dist = Eigen::MatrixXd::Zero(n, n);
  for (int x = 0; x < n; ++x)
    for (int y = x + 1; y < n; ++y) {
      const double d =
          van_rossum_distance(resp.outputs[x], resp.outputs[y], kernel);
      dist(x, y) = d;
      dist(y, x) = d;
    }

  const std::filesystem::path out(cfg.out_dir);
  std::ofstream csv = detail::open_out(out / "distance_matrix.csv");
  for (int x = 0; x < n; ++x) {
    for (int y = 0; y < n; ++y) {
      if (y) csv << ',';
      csv << detail::fmt_double(dist(x, y));
    }
    csv << '\n';
  }
  detail::write_row_classes(out / "distance_matrix_rows.csv", resp.classes);
  std::cout << "distance matrix: " << n << " x " << n << "\n";
  return 0;
}

// ---- gen-data ----------------------------------------------------------------

inline int cmd_gen_data(const RunConfig& cfg) {
  const std::filesystem::path out(cfg.out_dir);
  std::filesystem::create_directories(out);
  const GenConfig& g = cfg.gen;
  std::vector<SpikeTensor> patterns =
      gen_patterns(g.n_patterns, g.channels, g.horizon, g.pattern_rate,
                   derive_seed(cfg.seed, "patterns"));

  nlohmann::json items = nlohmann::json::array();
  auto add_item = [&](const std::string& file, int cls,
                      const std::string& role) {
    items.push_back({{"file", file}, {"class", cls}, {"role", role}});
  };

  for (int k = 0; k < g.n_patterns; ++k) {
    const std::string clean_name = "pattern_" + std::to_string(k) + "_clean.spk";
    save_spikes(patterns[k], (out / clean_name).string());
    add_item(clean_name, k, "clean");

    for (int v = 0; v < g.train_variants; ++v) {
      NoiseModel noise = g.noise;
      noise.seed = derive_seed(cfg.seed, "train_noise",
                               static_cast<std::uint64_t>(k),
                               static_cast<std::uint64_t>(v));
      const std::string name = "pattern_" + std::to_string(k) + "_train_" +
                               std::to_string(v) + ".spk";
      save_spikes(corrupt(patterns[k], noise), (out / name).string());
      add_item(name, k, "train");
    }
    for (int v = 0; v < g.test_variants; ++v) {
      NoiseModel noise = g.noise;
      noise.seed = derive_seed(cfg.seed, "test_noise",
                               static_cast<std::uint64_t>(k),
                               static_cast<std::uint64_t>(v));
      const std::string name = "pattern_" + std::to_string(k) + "_test_" +
                               std::to_string(v) + ".spk";
      save_spikes(corrupt(patterns[k], noise), (out / name).string());
      add_item(name, k, "test");
    }
  }

  nlohmann::json manifest{{"format", "spike_dataset"},
                          {"version", 1},
                          {"seed", cfg.seed},
                          {"horizon", g.horizon},
                          {"channels", g.channels},
                          {"n_patterns", g.n_patterns},
                          {"items", std::move(items)}};
  std::ofstream mf = detail::open_out(out / "manifest.json");
  mf << manifest.dump(2) << '\n';
  std::cout << "generated " << g.n_patterns << " patterns ("
            << g.train_variants << " train / " << g.test_variants
            << " test variants each) in " << out.string() << "\n";
  return 0;
}

// ---- encode ------------------------------------------------------------------

// Materializes the configured encoder's output for the training split as
// spike files plus a manifest (handy for inspecting encodings directly).
inline int cmd_encode(const RunConfig& cfg, int limit = 0) {
  const std::filesystem::path out(cfg.out_dir);
  std::filesystem::create_directories(out);
  detail::LoadedData data = detail::load_data(cfg);
  int n = data.train.count;
  if (limit > 0) n = std::min(n, limit);

  nlohmann::json items = nlohmann::json::array();
  const std::uint64_t seed = derive_seed(cfg.seed, "epoch", 0);
  for (int k = 0; k < n; ++k) {
    TrainItem item = data.train.get(k, seed);
    char name[32];
    std::snprintf(name, sizeof name, "sample_%06d.spk", k);
    save_spikes(SpikeTensor::from_matrix(item.input), (out / name).string());
    nlohmann::json entry{{"file", name}};
    if (std::holds_alternative<int>(item.target))
      entry["class"] = std::get<int>(item.target);
    items.push_back(std::move(entry));
  }
  nlohmann::json manifest{{"format", "encoded_spikes"},
                          {"version", 1},
                          {"seed", cfg.seed},
                          {"items", std::move(items)}};
  std::ofstream mf = detail::open_out(out / "manifest.json");
  mf << manifest.dump(2) << '\n';
  std::cout << "encoded " << n << " samples into " << out.string() << "\n";
  return 0;
}

}  // namespace spikeiir
