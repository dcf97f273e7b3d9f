// Run configuration: a single versioned JSON file naming the task, topology,
// neuron/filter/optimizer hyperparameters, encoder and data locations. Every
// hyperparameter has a named default; parsing validates values (and rejects
// unknown keys, catching typos) before any compute starts, and errors name
// the offending field.
#pragma once

#include <cmath>
#include <cstdint>
#include <fstream>
#include <stdexcept>
#include <string>
#include <vector>

#include "json.hpp"
#include "spikeiir/encoders.hpp"
#include "spikeiir/filter.hpp"
#include "spikeiir/loss.hpp"
#include "spikeiir/network.hpp"
#include "spikeiir/train.hpp"

namespace spikeiir {

inline constexpr int kConfigVersion = 1;

struct FilterConfig {
  std::string kind = "dual_exp";  // dual_exp | alpha | simple | custom
  double tau_m = 4.0;
  double tau_s = 1.0;
  double tau = 4.0;  // alpha kernel time constant
  bool trainable = false;
  double gain = 1.0;
  std::vector<double> feedback, feedforward;  // custom kind only
};

struct NeuronConfig {
  double lambda = 0.0;
  double theta = -1.0;  // <0 = derive exp(-1/tau_m) from the layer filter
  double v_th = 1.0;
  double sigma = 0.4;
};

struct EncoderConfig {
  std::string kind = "none";  // none | rate | current_lif
  int horizon = 0;            // required for rate encoding
  std::string mode = "bernoulli";
  double max_rate = 1.0;
  double gain = 0.0;  // current_lif; 0 = auto from training data peaks
  double leak = 1.0;  // full carry-over: sub-peak values accumulate to threshold
  double theta = 0.0;
};

struct LossConfig {
  std::string kind = "rate";  // rate | van_rossum
  FilterConfig kernel;        // van_rossum smoothing kernel
};

struct OptimizerConfig {
  double lr = 1e-4;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double eps = 1e-8;
  double clip_norm = 0.0;
};

struct GenConfig {
  int n_patterns = 3;
  int channels = 50;
  int horizon = 100;
  double pattern_rate = 0.1;
  int train_variants = 20;
  int test_variants = 5;
  NoiseModel noise{2.0, 0.2, 0.01, {}, 0};
};

struct DataConfig {
  std::string format = "none";  // mnist_idx | spike_dir | csv | none
  std::string train_images, train_labels, test_images, test_labels;
  std::string dir;   // spike_dir dataset root (manifest.json inside)
  std::string path;  // csv file
  std::string sample_column = "sample";
  std::string label_column = "label";
  double train_fraction = 0.8;  // csv: leading fraction used for training
  int limit = 0;                // cap on training samples; 0 = all
  int test_limit = 0;
};

struct RunConfig {
  std::string task = "classify";  // classify | associate
  std::uint64_t seed = 1;
  int epochs = 1;
  int batch_size = 64;
  int threads = 1;
  std::string out_dir = "out";
  std::vector<int> layer_sizes;
  FilterConfig filter;            // prototype applied to every layer
  std::vector<FilterConfig> per_layer_filters;  // optional override
  NeuronConfig neuron;
  LossConfig loss;
  OptimizerConfig optimizer;
  EncoderConfig encoder;
  GenConfig gen;
  DataConfig data;
};

namespace detail {

using nlohmann::json;

inline void check_keys(const json& obj, const std::string& where,
                       std::initializer_list<const char*> allowed) {
  for (const auto& [key, value] : obj.items()) {
    bool ok = false;
    for (const char* a : allowed)
      if (key == a) {
        ok = true;
        break;
      }
    if (!ok)
      throw std::runtime_error("config: unknown field '" + where + "." + key +
                               "'");
  }
}

template <typename T>
T field_or(const json& obj, const std::string& where, const char* key, T def) {
  if (!obj.contains(key)) return def;
  try {
    return obj.at(key).get<T>();
  } catch (const json::exception&) {
    throw std::runtime_error("config: field '" + where + "." + key +
                             "' has the wrong type");
  }
}

inline FilterConfig parse_filter(const json& obj, const std::string& where) {
  check_keys(obj, where,
             {"kind", "tau_m", "tau_s", "tau", "trainable", "gain", "feedback",
              "feedforward"});
  FilterConfig f;
  f.kind = field_or<std::string>(obj, where, "kind", f.kind);
  if (f.kind != "dual_exp" && f.kind != "alpha" && f.kind != "simple" &&
      f.kind != "custom")
    throw std::runtime_error("config: field '" + where +
                             ".kind' must be one of dual_exp|alpha|simple|custom");
  f.tau_m = field_or(obj, where, "tau_m", f.tau_m);
  f.tau_s = field_or(obj, where, "tau_s", f.tau_s);
  f.tau = field_or(obj, where, "tau", f.tau);
  f.trainable = field_or(obj, where, "trainable", f.trainable);
  f.gain = field_or(obj, where, "gain", f.gain);
  f.feedback = field_or(obj, where, "feedback", f.feedback);
  f.feedforward = field_or(obj, where, "feedforward", f.feedforward);
  return f;
}

inline NoiseModel parse_noise(const json& obj, const std::string& where) {
  check_keys(obj, where,
             {"jitter_sigma", "delete_prob", "background_rate", "occlusions"});
  NoiseModel n;
  n.jitter_sigma = field_or(obj, where, "jitter_sigma", 2.0);
  n.delete_prob = field_or(obj, where, "delete_prob", 0.2);
  n.background_rate = field_or(obj, where, "background_rate", 0.01);
  if (n.jitter_sigma < 0.0)
    throw std::runtime_error("config: field '" + where +
                             ".jitter_sigma' must be >= 0");
  if (n.delete_prob < 0.0 || n.delete_prob > 1.0)
    throw std::runtime_error("config: field '" + where +
                             ".delete_prob' must be in [0, 1]");
  if (n.background_rate < 0.0 || n.background_rate >= 1.0)
    throw std::runtime_error("config: field '" + where +
                             ".background_rate' must be in [0, 1)");
  if (obj.contains("occlusions")) {
    for (const auto& m : obj.at("occlusions")) {
      check_keys(m, where + ".occlusions[]",
                 {"channel_begin", "channel_end", "t_begin", "t_end"});
      OcclusionMask mask;
      mask.channel_begin = field_or(m, where, "channel_begin", 0);
      mask.channel_end = field_or(m, where, "channel_end", 0);
      mask.t_begin = field_or(m, where, "t_begin", 0);
      mask.t_end = field_or(m, where, "t_end", 0);
      n.occlusions.push_back(mask);
    }
  }
  return n;
}

}  // namespace detail

inline FilterCoeffs build_filter(const FilterConfig& f) {
  if (f.kind == "dual_exp") return dual_exp_coeffs(f.tau_m, f.tau_s, f.trainable);
  if (f.kind == "alpha") return alpha_synapse_coeffs(f.tau, f.trainable);
  if (f.kind == "simple") return simple_lif_coeffs(f.trainable);
  Eigen::VectorXd fb(f.feedback.size()), ff(f.feedforward.size());
  for (size_t i = 0; i < f.feedback.size(); ++i) fb[i] = f.feedback[i];
  for (size_t i = 0; i < f.feedforward.size(); ++i) ff[i] = f.feedforward[i];
  return make_filter(std::move(fb), std::move(ff), f.trainable, f.gain);
}

inline NeuronParams build_neuron(const NeuronConfig& n,
                                 const FilterConfig& filter) {
  NeuronParams p;
  p.lambda = n.lambda;
  p.v_th = n.v_th;
  p.sigma = n.sigma;
  if (n.theta >= 0.0) {
    p.theta = n.theta;
  } else {
    // Reset decay tied to the membrane time constant of the synapse model.
    const double tau_ref = filter.kind == "alpha" ? filter.tau
                           : filter.kind == "dual_exp" ? filter.tau_m
                                                       : 4.0;
    p.theta = std::exp(-1.0 / tau_ref);
  }
  validate_neuron(p);
  return p;
}

// Assembles the dense network: per-layer prototype filters and seeded
// uniform weight init (one derived stream per layer).
inline NetworkSpec build_network(const RunConfig& cfg) {
  if (cfg.layer_sizes.size() < 2)
    throw std::runtime_error(
        "config: field 'network.layer_sizes' needs at least two entries");
  const std::size_t n_layers = cfg.layer_sizes.size() - 1;
  if (!cfg.per_layer_filters.empty() &&
      cfg.per_layer_filters.size() != n_layers)
    throw std::runtime_error(
        "config: field 'network.filters' must list one filter per layer");
  NetworkSpec net;
  for (std::size_t l = 0; l < n_layers; ++l) {
    const FilterConfig& fcfg =
        cfg.per_layer_filters.empty() ? cfg.filter : cfg.per_layer_filters[l];
    Rng rng(derive_seed(cfg.seed, "weights", l));
    net.layers.push_back(make_dense_layer(
        cfg.layer_sizes[l + 1], cfg.layer_sizes[l], build_filter(fcfg),
        build_neuron(cfg.neuron, fcfg), rng));
  }
  validate_network(net);
  return net;
}

inline LossKind build_loss(const LossConfig& cfg) {
  if (cfg.kind == "rate") return LossKind::rate();
  return LossKind::distance(build_filter(cfg.kernel));
}

inline RunConfig config_from_json(const nlohmann::json& j) {
  using detail::check_keys;
  using detail::field_or;
  check_keys(j, "",
             {"config_version", "task", "seed", "epochs", "batch_size",
              "threads", "out_dir", "network", "loss", "optimizer", "encoder",
              "gen", "data"});
  if (!j.contains("config_version"))
    throw std::runtime_error("config: missing field 'config_version'");
  const int version = j.at("config_version").get<int>();
  if (version != kConfigVersion)
    throw std::runtime_error("config: unsupported config_version " +
                             std::to_string(version) + " (supported: " +
                             std::to_string(kConfigVersion) + ")");

  RunConfig cfg;
  cfg.task = field_or<std::string>(j, "", "task", cfg.task);
  if (cfg.task != "classify" && cfg.task != "associate")
    throw std::runtime_error(
        "config: field 'task' must be classify or associate");
  cfg.seed = field_or<std::uint64_t>(j, "", "seed", cfg.seed);
  cfg.epochs = field_or(j, "", "epochs", cfg.epochs);
  cfg.batch_size = field_or(j, "", "batch_size", cfg.batch_size);
  cfg.threads = field_or(j, "", "threads", cfg.threads);
  cfg.out_dir = field_or<std::string>(j, "", "out_dir", cfg.out_dir);
  if (cfg.epochs < 0) throw std::runtime_error("config: field 'epochs' must be >= 0");
  if (cfg.batch_size <= 0)
    throw std::runtime_error("config: field 'batch_size' must be > 0");
  if (cfg.threads <= 0)
    throw std::runtime_error("config: field 'threads' must be > 0");

  if (!j.contains("network"))
    throw std::runtime_error("config: missing field 'network'");
  const auto& jn = j.at("network");
  check_keys(jn, "network", {"layer_sizes", "filter", "filters", "neuron"});
  cfg.layer_sizes = field_or(jn, "network", "layer_sizes", cfg.layer_sizes);
  if (cfg.layer_sizes.size() < 2)
    throw std::runtime_error(
        "config: field 'network.layer_sizes' needs at least two entries");
  for (int s : cfg.layer_sizes)
    if (s <= 0)
      throw std::runtime_error(
          "config: field 'network.layer_sizes' entries must be positive");
  if (jn.contains("filter"))
    cfg.filter = detail::parse_filter(jn.at("filter"), "network.filter");
  if (jn.contains("filters"))
    for (const auto& jf : jn.at("filters"))
      cfg.per_layer_filters.push_back(
          detail::parse_filter(jf, "network.filters[]"));
  if (jn.contains("neuron")) {
    const auto& jj = jn.at("neuron");
    check_keys(jj, "network.neuron", {"lambda", "theta", "v_th", "sigma"});
    cfg.neuron.lambda = field_or(jj, "network.neuron", "lambda", 0.0);
    cfg.neuron.theta = field_or(jj, "network.neuron", "theta", -1.0);
    cfg.neuron.v_th = field_or(jj, "network.neuron", "v_th", 1.0);
    cfg.neuron.sigma = field_or(jj, "network.neuron", "sigma", 0.4);
  }

  if (j.contains("loss")) {
    const auto& jl = j.at("loss");
    check_keys(jl, "loss", {"kind", "kernel"});
    cfg.loss.kind = field_or<std::string>(jl, "loss", "kind", cfg.loss.kind);
    if (cfg.loss.kind != "rate" && cfg.loss.kind != "van_rossum")
      throw std::runtime_error(
          "config: field 'loss.kind' must be rate or van_rossum");
    if (jl.contains("kernel"))
      cfg.loss.kernel = detail::parse_filter(jl.at("kernel"), "loss.kernel");
  }

  if (j.contains("optimizer")) {
    const auto& jo = j.at("optimizer");
    check_keys(jo, "optimizer", {"lr", "beta1", "beta2", "eps", "clip_norm"});
    cfg.optimizer.lr = field_or(jo, "optimizer", "lr", cfg.optimizer.lr);
    cfg.optimizer.beta1 = field_or(jo, "optimizer", "beta1", cfg.optimizer.beta1);
    cfg.optimizer.beta2 = field_or(jo, "optimizer", "beta2", cfg.optimizer.beta2);
    cfg.optimizer.eps = field_or(jo, "optimizer", "eps", cfg.optimizer.eps);
    cfg.optimizer.clip_norm =
        field_or(jo, "optimizer", "clip_norm", cfg.optimizer.clip_norm);
    if (!(cfg.optimizer.lr > 0.0))
      throw std::runtime_error("config: field 'optimizer.lr' must be > 0");
    if (cfg.optimizer.clip_norm < 0.0)
      throw std::runtime_error(
          "config: field 'optimizer.clip_norm' must be >= 0");
  }

  if (j.contains("encoder")) {
    const auto& je = j.at("encoder");
    check_keys(je, "encoder",
               {"kind", "horizon", "mode", "max_rate", "gain", "leak", "theta"});
    cfg.encoder.kind = field_or<std::string>(je, "encoder", "kind", cfg.encoder.kind);
    if (cfg.encoder.kind != "none" && cfg.encoder.kind != "rate" &&
        cfg.encoder.kind != "current_lif")
      throw std::runtime_error(
          "config: field 'encoder.kind' must be none, rate or current_lif");
    cfg.encoder.horizon = field_or(je, "encoder", "horizon", cfg.encoder.horizon);
    cfg.encoder.mode = field_or<std::string>(je, "encoder", "mode", cfg.encoder.mode);
    if (cfg.encoder.mode != "bernoulli" && cfg.encoder.mode != "deterministic")
      throw std::runtime_error(
          "config: field 'encoder.mode' must be bernoulli or deterministic");
    cfg.encoder.max_rate = field_or(je, "encoder", "max_rate", cfg.encoder.max_rate);
    cfg.encoder.gain = field_or(je, "encoder", "gain", cfg.encoder.gain);
    cfg.encoder.leak = field_or(je, "encoder", "leak", cfg.encoder.leak);
    cfg.encoder.theta = field_or(je, "encoder", "theta", cfg.encoder.theta);
  }

  if (j.contains("gen")) {
    const auto& jg = j.at("gen");
    check_keys(jg, "gen",
               {"n_patterns", "channels", "horizon", "pattern_rate",
                "train_variants", "test_variants", "noise"});
    cfg.gen.n_patterns = field_or(jg, "gen", "n_patterns", cfg.gen.n_patterns);
    cfg.gen.channels = field_or(jg, "gen", "channels", cfg.gen.channels);
    cfg.gen.horizon = field_or(jg, "gen", "horizon", cfg.gen.horizon);
    cfg.gen.pattern_rate = field_or(jg, "gen", "pattern_rate", cfg.gen.pattern_rate);
    cfg.gen.train_variants =
        field_or(jg, "gen", "train_variants", cfg.gen.train_variants);
    cfg.gen.test_variants =
        field_or(jg, "gen", "test_variants", cfg.gen.test_variants);
    if (jg.contains("noise"))
      cfg.gen.noise = detail::parse_noise(jg.at("noise"), "gen.noise");
  }

  if (j.contains("data")) {
    const auto& jd = j.at("data");
    check_keys(jd, "data",
               {"format", "train_images", "train_labels", "test_images",
                "test_labels", "dir", "path", "sample_column", "label_column",
                "train_fraction", "limit", "test_limit"});
    cfg.data.format = field_or<std::string>(jd, "data", "format", cfg.data.format);
    if (cfg.data.format != "none" && cfg.data.format != "mnist_idx" &&
        cfg.data.format != "spike_dir" && cfg.data.format != "csv")
      throw std::runtime_error(
          "config: field 'data.format' must be none, mnist_idx, spike_dir or csv");
    cfg.data.train_images =
        field_or<std::string>(jd, "data", "train_images", "");
    cfg.data.train_labels =
        field_or<std::string>(jd, "data", "train_labels", "");
    cfg.data.test_images = field_or<std::string>(jd, "data", "test_images", "");
    cfg.data.test_labels = field_or<std::string>(jd, "data", "test_labels", "");
    cfg.data.dir = field_or<std::string>(jd, "data", "dir", "");
    cfg.data.path = field_or<std::string>(jd, "data", "path", "");
    cfg.data.sample_column =
        field_or<std::string>(jd, "data", "sample_column", cfg.data.sample_column);
    cfg.data.label_column =
        field_or<std::string>(jd, "data", "label_column", cfg.data.label_column);
    cfg.data.train_fraction =
        field_or(jd, "data", "train_fraction", cfg.data.train_fraction);
    cfg.data.limit = field_or(jd, "data", "limit", cfg.data.limit);
    cfg.data.test_limit = field_or(jd, "data", "test_limit", cfg.data.test_limit);
    if (!(cfg.data.train_fraction > 0.0) || cfg.data.train_fraction > 1.0)
      throw std::runtime_error(
          "config: field 'data.train_fraction' must be in (0, 1]");
  }

  return cfg;
}

inline RunConfig load_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open config file: " + path);
  nlohmann::json j;
  try {
    in >> j;
  } catch (const nlohmann::json::exception& e) {
    throw std::runtime_error("config: " + path + ": " + e.what());
  }
  return config_from_json(j);
}

}  // namespace spikeiir
