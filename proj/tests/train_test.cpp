#include <catch2/catch_amalgamated.hpp>

#include <algorithm>
#include <memory>
#include <vector>

#include "spikeiir/train.hpp"
#include "support.hpp"

using namespace spikeiir;
using Catch::Matchers::WithinAbs;

namespace {

// Fixed association-style dataset: corrupted-ish inputs and spike targets,
// all pre-materialized so the source is deterministic.
SampleSource fixed_pair_source(int n, int channels, int horizon,
                               std::uint64_t seed) {
  auto samples = std::make_shared<std::vector<LabeledSample>>();
  for (int k = 0; k < n; ++k) {
    LabeledSample s;
    s.input = SpikeTensor::from_matrix(
        testsupport::random_spikes(channels, horizon, 0.3, seed + 2 * k));
    s.label = SpikeTensor::from_matrix(
        testsupport::random_spikes(channels, horizon, 0.2, seed + 2 * k + 1));
    samples->push_back(std::move(s));
  }
  return make_spike_pair_source(std::move(samples));
}

// Two-class toy task: class c is "channel c fires densely, the other rarely".
SampleSource two_class_source(int n_per_class, int horizon,
                              std::uint64_t seed) {
  auto samples = std::make_shared<std::vector<LabeledSample>>();
  for (int k = 0; k < 2 * n_per_class; ++k) {
    const int cls = k % 2;
    Eigen::MatrixXd m(2, horizon);
    m.row(cls) = testsupport::random_spikes(1, horizon, 0.8, seed + k);
    m.row(1 - cls) = testsupport::random_spikes(1, horizon, 0.05, seed + 1000 + k);
    LabeledSample s;
    s.input = SpikeTensor::from_matrix(m);
    s.label = cls;
    samples->push_back(std::move(s));
  }
  return make_spike_class_source(std::move(samples));
}

bool nets_identical(const NetworkSpec& a, const NetworkSpec& b) {
  if (a.layers.size() != b.layers.size()) return false;
  for (size_t l = 0; l < a.layers.size(); ++l) {
    if (!(a.layers[l].weights == b.layers[l].weights)) return false;
    for (size_t j = 0; j < a.layers[l].filters.size(); ++j) {
      if (!(a.layers[l].filters[j].feedback ==
            b.layers[l].filters[j].feedback) ||
          !(a.layers[l].filters[j].feedforward ==
            b.layers[l].filters[j].feedforward))
        return false;
    }
  }
  return true;
}

}  // namespace

TEST_CASE("seeded shuffles are reproducible permutations", "[train]") {
  const auto a = shuffle_indices(100, 7);
  const auto b = shuffle_indices(100, 7);
  CHECK(a == b);
  auto sorted = a;
  std::sort(sorted.begin(), sorted.end());
  for (int i = 0; i < 100; ++i) CHECK(sorted[i] == i);
  CHECK(shuffle_indices(100, 8) != a);
  CHECK(shuffle_indices(1, 7) == std::vector<int>{0});
}

TEST_CASE("one epoch equals the hand-rolled batch update", "[train]") {
  const LossKind kind =
      LossKind::distance(dual_exp_coeffs(4.0, 1.0));
  const SampleSource src = fixed_pair_source(6, 3, 12, 500);

  NetworkSpec net = testsupport::make_net(
      {3, 5, 3}, dual_exp_coeffs(4.0, 1.0, /*trainable=*/true), NeuronParams{},
      77);
  NetworkSpec manual = net;

  TrainOptions opt;
  opt.batch_size = 6;  // single batch
  opt.shuffle = false;
  opt.seed = 123;
  AdamState adam = AdamState::init(net);
  const EpochRecord rec = train_epoch(net, src, kind, opt, adam, 0);

  // By hand: average per-sample gradients in index order, one Adam step.
  const std::uint64_t epoch_seed = derive_seed(opt.seed, "epoch", 0);
  Gradients sum = Gradients::zeros_like(manual);
  double loss_sum = 0.0;
  for (int k = 0; k < 6; ++k) {
    const TrainItem item = src.get(k, epoch_seed);
    const SimState state = network_forward_recorded(manual, item.input);
    const LossValue lv = compute_loss(state.layers.back().o, item, kind);
    loss_sum += lv.loss;
    sum.add(backward(manual, state, lv.d_output));
  }
  sum.scale(1.0 / 6.0);
  AdamState manual_adam = AdamState::init(manual);
  adam_step(manual, sum, manual_adam);

  CHECK(nets_identical(net, manual));
  CHECK(rec.loss == loss_sum / 6.0);
  CHECK(rec.epoch == 0);
  CHECK(rec.seconds >= 0.0);
}

TEST_CASE("training is bit-reproducible run to run", "[train]") {
  const LossKind kind = LossKind::rate();
  const SampleSource src = two_class_source(8, 15, 600);
  TrainOptions opt;
  opt.batch_size = 4;
  opt.seed = 99;

  NetworkSpec a = testsupport::make_net({2, 4, 2}, dual_exp_coeffs(4.0, 1.0),
                                        NeuronParams{}, 5);
  NetworkSpec b = a;
  AdamState oa = AdamState::init(a), ob = AdamState::init(b);
  TrainRecord ra, rb;
  for (int e = 0; e < 3; ++e) {
    ra.push_back(train_epoch(a, src, kind, opt, oa, e));
    rb.push_back(train_epoch(b, src, kind, opt, ob, e));
  }
  CHECK(nets_identical(a, b));
  for (int e = 0; e < 3; ++e) {
    CHECK(ra[e].loss == rb[e].loss);
    CHECK(ra[e].metric == rb[e].metric);
  }
}

TEST_CASE("thread count does not change the result", "[train]") {
  const LossKind kind =
      LossKind::distance(dual_exp_coeffs(4.0, 1.0));
  const SampleSource src = fixed_pair_source(10, 3, 12, 700);
  NetworkSpec seq = testsupport::make_net(
      {3, 6, 3}, dual_exp_coeffs(4.0, 1.0, /*trainable=*/true), NeuronParams{},
      13);
  NetworkSpec par = seq;

  TrainOptions opt;
  opt.batch_size = 5;
  opt.seed = 31;
  AdamState os = AdamState::init(seq), op = AdamState::init(par);
  TrainOptions opt4 = opt;
  opt4.threads = 4;
  for (int e = 0; e < 2; ++e) {
    const EpochRecord rs = train_epoch(seq, src, kind, opt, os, e);
    const EpochRecord rp = train_epoch(par, src, kind, opt4, op, e);
    CHECK(rs.loss == rp.loss);
    CHECK(rs.metric == rp.metric);
  }
  CHECK(nets_identical(seq, par));

  const EvalResult es = evaluate(seq, src, kind, 0, 1);
  const EvalResult ep = evaluate(par, src, kind, 0, 4);
  CHECK(es.loss == ep.loss);
  CHECK(es.metric == ep.metric);
}

TEST_CASE("degenerate inputs are rejected", "[train]") {
  NetworkSpec net = testsupport::make_net({2, 2}, simple_lif_coeffs(),
                                          NeuronParams{}, 1);
  AdamState opt = AdamState::init(net);
  SampleSource empty;
  TrainOptions topt;
  CHECK_THROWS_AS(train_epoch(net, empty, LossKind::rate(), topt, opt, 0),
                  std::invalid_argument);
  CHECK_THROWS_AS(evaluate(net, empty, LossKind::rate()),
                  std::invalid_argument);
  const SampleSource src = two_class_source(2, 10, 1);
  TrainOptions bad;
  bad.batch_size = 0;
  CHECK_THROWS_AS(train_epoch(net, src, LossKind::rate(), bad, opt, 0),
                  std::invalid_argument);
}

TEST_CASE("count ties resolve to the lowest channel", "[train]") {
  Eigen::MatrixXd o(3, 4);
  o << 1, 1, 1, 0,
       0, 1, 1, 1,
       0, 0, 0, 0;
  CHECK(classify_predict(o) == 0);  // counts 3, 3, 0
  o(1, 0) = 1;                      // counts 3, 4, 0
  CHECK(classify_predict(o) == 1);
}

TEST_CASE("a separable two-class task is learned quickly", "[train]") {
  const LossKind kind = LossKind::rate();
  const SampleSource train = two_class_source(16, 20, 800);
  const SampleSource test = two_class_source(8, 20, 900);

  NetworkSpec net = testsupport::make_net({2, 4, 2}, dual_exp_coeffs(4.0, 1.0),
                                          NeuronParams{}, 21);
  AdamParams hyper;
  hyper.lr = 1e-2;
  AdamState opt = AdamState::init(net, hyper);
  TrainOptions topt;
  topt.batch_size = 8;
  topt.seed = 77;

  const EvalResult before = evaluate(net, test, kind);
  double first_loss = 0.0, last_loss = 0.0;
  for (int e = 0; e < 30; ++e) {
    const EpochRecord rec = train_epoch(net, train, kind, topt, opt, e);
    if (e == 0) first_loss = rec.loss;
    last_loss = rec.loss;
  }
  const EvalResult after = evaluate(net, test, kind);
  INFO("accuracy " << before.metric << " -> " << after.metric << ", loss "
                   << first_loss << " -> " << last_loss);
  CHECK(after.metric >= 0.9);
  CHECK(last_loss < first_loss);
}

TEST_CASE("epoch-seeded encoders resample per epoch, not per call", "[train]") {
  auto samples = std::make_shared<std::vector<LabeledSample>>();
  for (int k = 0; k < 3; ++k) {
    LabeledSample s;
    s.input = Eigen::VectorXd(Eigen::VectorXd::Constant(5, 0.5));
    s.label = k % 2;
    samples->push_back(std::move(s));
  }
  RateEncodeConfig cfg;
  cfg.horizon = 40;
  const SampleSource src = make_rate_encoded_source(samples, cfg);
  REQUIRE(src.count == 3);
  const TrainItem a = src.get(1, 42);
  const TrainItem b = src.get(1, 42);
  const TrainItem c = src.get(1, 43);
  const TrainItem d = src.get(2, 42);
  CHECK(a.input == b.input);     // same epoch, same sample: identical draw
  CHECK(a.input != c.input);     // new epoch reseeds
  CHECK(a.input != d.input);     // sibling samples differ
  CHECK(std::get<int>(a.target) == 1);
}
