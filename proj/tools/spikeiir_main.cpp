// Command-line driver. Every run is fully described by a JSON config file;
// a few flags override config fields for scripting convenience. Exit code 0
// on success, 1 with a one-line diagnostic on stderr otherwise.
#include <cstdint>
#include <exception>
#include <iostream>
#include <string>

#include "CLI11.hpp"
#include "spikeiir/commands.hpp"
#include "spikeiir/config.hpp"

namespace {

struct CommonArgs {
  std::string config_path;
  std::string checkpoint;
  std::string out_dir;
  std::uint64_t seed = 0;
  bool seed_set = false;
  int threads = 0;
};

void add_common(CLI::App* cmd, CommonArgs& args, bool config_required = true) {
  auto* c = cmd->add_option("--config", args.config_path,
                            "JSON run configuration file");
  if (config_required) c->required();
  cmd->add_option("--seed", args.seed, "override the config seed")
      ->each([&args](const std::string&) { args.seed_set = true; });
  cmd->add_option("--out", args.out_dir, "override the output directory");
  cmd->add_option("--threads", args.threads,
                  "override the worker thread count");
}

spikeiir::RunConfig load_with_overrides(const CommonArgs& args) {
  spikeiir::RunConfig cfg = spikeiir::load_config(args.config_path);
  if (args.seed_set) cfg.seed = args.seed;
  if (!args.out_dir.empty()) cfg.out_dir = args.out_dir;
  if (args.threads > 0) cfg.threads = args.threads;
  return cfg;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"spiking-network trainer built on trainable IIR synapse filters"};
  app.require_subcommand(1);

  CommonArgs train_args, eval_args, rate_args, dist_args, gen_args, enc_args;
  std::string eval_split = "test", rate_split = "test", dist_split = "test";
  int rate_layer = -1, dist_layer = -1;
  int rate_limit = 0, dist_limit = 0, enc_limit = 0;

  CLI::App* train = app.add_subcommand("train", "train a network per config");
  add_common(train, train_args);
  train->add_option("--checkpoint", train_args.checkpoint,
                    "resume from this checkpoint");

  CLI::App* eval = app.add_subcommand("eval", "evaluate a checkpoint");
  add_common(eval, eval_args);
  eval->add_option("--checkpoint", eval_args.checkpoint, "checkpoint to load")
      ->required();
  eval->add_option("--split", eval_split, "dataset split (train|test)");

  CLI::App* rate = app.add_subcommand(
      "rate-map", "per-neuron firing rates of one layer across samples");
  add_common(rate, rate_args);
  rate->add_option("--checkpoint", rate_args.checkpoint, "checkpoint to load")
      ->required();
  rate->add_option("--layer", rate_layer, "0-based layer index")->required();
  rate->add_option("--split", rate_split, "dataset split (train|test)");
  rate->add_option("--limit", rate_limit, "cap on analyzed samples");

  CLI::App* dist = app.add_subcommand(
      "distance-matrix",
      "pairwise filtered spike-train distances of one layer's responses");
  add_common(dist, dist_args);
  dist->add_option("--checkpoint", dist_args.checkpoint, "checkpoint to load")
      ->required();
  dist->add_option("--layer", dist_layer, "0-based layer index")->required();
  dist->add_option("--split", dist_split, "dataset split (train|test)");
  dist->add_option("--limit", dist_limit, "cap on analyzed samples");

  CLI::App* gen = app.add_subcommand(
      "gen-data", "generate the synthetic pattern dataset with noise variants");
  add_common(gen, gen_args);

  CLI::App* enc = app.add_subcommand(
      "encode", "write the configured encoder's spike trains to disk");
  add_common(enc, enc_args);
  enc->add_option("--limit", enc_limit, "cap on encoded samples");

  CLI11_PARSE(app, argc, argv);

  try {
    if (train->parsed())
      return spikeiir::cmd_train(load_with_overrides(train_args),
                                 train_args.checkpoint);
    if (eval->parsed())
      return spikeiir::cmd_eval(load_with_overrides(eval_args),
                                eval_args.checkpoint, eval_split);
    if (rate->parsed())
      return spikeiir::cmd_rate_map(load_with_overrides(rate_args),
                                    rate_args.checkpoint, rate_layer,
                                    rate_split, rate_limit);
    if (dist->parsed())
      return spikeiir::cmd_distance_matrix(load_with_overrides(dist_args),
                                           dist_args.checkpoint, dist_layer,
                                           dist_split, dist_limit);
    if (gen->parsed()) return spikeiir::cmd_gen_data(load_with_overrides(gen_args));
    if (enc->parsed())
      return spikeiir::cmd_encode(load_with_overrides(enc_args), enc_limit);
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  std::cerr << "error: no subcommand\n";
  return 1;
}
