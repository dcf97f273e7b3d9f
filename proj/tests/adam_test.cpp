#include <catch2/catch_amalgamated.hpp>

#include <cmath>

#include "spikeiir/adam.hpp"
#include "support.hpp"

using namespace spikeiir;
using Catch::Matchers::WithinAbs;

namespace {

NetworkSpec one_weight_net(double w, FilterCoeffs filter) {
  NetworkSpec net;
  LayerSpec layer;
  layer.weights = Eigen::MatrixXd::Constant(1, 1, w);
  layer.filters = {std::move(filter)};
  layer.neuron = NeuronParams{};
  net.layers.push_back(std::move(layer));
  return net;
}

}  // namespace

TEST_CASE("zero gradient leaves parameters untouched but advances the step",
          "[adam]") {
  NetworkSpec net = testsupport::make_net(
      {3, 4, 2}, dual_exp_coeffs(4.0, 1.0, /*trainable=*/true), NeuronParams{},
      3);
  const Eigen::MatrixXd w0 = net.layers[0].weights;
  const Eigen::VectorXd fb0 = net.layers[0].filters[0].feedback;
  AdamState opt = AdamState::init(net);
  const Gradients zeros = Gradients::zeros_like(net);
  CHECK(adam_step(net, zeros, opt) == 0);
  CHECK(opt.step == 1);
  CHECK(net.layers[0].weights == w0);
  CHECK(net.layers[0].filters[0].feedback == fb0);
}

TEST_CASE("first step moves a parameter by lr * g / (|g| + eps)", "[adam]") {
  // Bias correction makes the first step's m-hat equal g and v-hat equal g^2,
  // so the update is lr * g / (|g| + eps); for g = 0.1 and defaults that is
  // 9.9999990000001e-05.
  NetworkSpec net = one_weight_net(0.5, simple_lif_coeffs());
  AdamState opt = AdamState::init(net);
  Gradients g = Gradients::zeros_like(net);
  g.d_weights[0](0, 0) = 0.1;
  adam_step(net, g, opt);
  CHECK_THAT(net.layers[0].weights(0, 0),
             WithinAbs(0.5 - 9.9999990000001e-05, 1e-18));
}

TEST_CASE("constant gradient keeps step size pinned near lr", "[adam]") {
  NetworkSpec net = one_weight_net(1.0, simple_lif_coeffs());
  AdamParams hyper;
  hyper.lr = 1e-3;
  AdamState opt = AdamState::init(net, hyper);
  Gradients g = Gradients::zeros_like(net);
  g.d_weights[0](0, 0) = -0.37;
  double prev = net.layers[0].weights(0, 0);
  for (int s = 0; s < 10; ++s) {
    adam_step(net, g, opt);
    const double now = net.layers[0].weights(0, 0);
    // Negative gradient: the parameter climbs by almost exactly lr.
    CHECK_THAT(now - prev, WithinAbs(hyper.lr, 1e-6));
    prev = now;
  }
  CHECK(opt.step == 10);
}

TEST_CASE("filter update through the optimizer keeps poles inside the disc",
          "[adam]") {
  // First-order recursion sitting just inside the stability boundary; a step
  // pushing the coefficient up would cross it, so the clamp must engage.
  Eigen::VectorXd fb(1), ff(1);
  fb << 0.9999995;
  ff << 1.0;
  NetworkSpec net =
      one_weight_net(1.0, make_filter(fb, ff, /*trainable=*/true));
  AdamState opt = AdamState::init(net);
  Gradients g = Gradients::zeros_like(net);
  g.d_filters[0][0]->d_feedback[0] = -1.0;  // descent direction = +lr
  const int clamped = adam_step(net, g, opt);
  CHECK(clamped == 1);
  CHECK_THAT(max_pole_modulus(net.layers[0].filters[0]), WithinAbs(0.999, 1e-12));
  CHECK(is_stable(net.layers[0].filters[0]));
}

TEST_CASE("well-separated poles are not clamped", "[adam]") {
  NetworkSpec net = one_weight_net(
      1.0, dual_exp_coeffs(4.0, 1.0, /*trainable=*/true));
  AdamState opt = AdamState::init(net);
  Gradients g = Gradients::zeros_like(net);
  g.d_filters[0][0]->d_feedback[0] = 0.5;
  g.d_filters[0][0]->d_feedforward[1] = -0.2;
  CHECK(adam_step(net, g, opt) == 0);
  // The coefficients actually moved.
  CHECK(net.layers[0].filters[0].feedback[0] != dual_exp_coeffs(4.0, 1.0).feedback[0]);
  CHECK(net.layers[0].filters[0].feedforward[1] !=
        dual_exp_coeffs(4.0, 1.0).feedforward[1]);
}

TEST_CASE("optimizer state mirrors the trainable structure", "[adam]") {
  NetworkSpec net = testsupport::make_net(
      {2, 3, 2}, dual_exp_coeffs(4.0, 1.0, /*trainable=*/false),
      NeuronParams{}, 9);
  net.layers[1].filters.assign(3, dual_exp_coeffs(4.0, 1.0, true));
  AdamState opt = AdamState::init(net);
  for (const auto& fg : opt.m.d_filters[0]) CHECK_FALSE(fg.has_value());
  for (const auto& fg : opt.m.d_filters[1]) CHECK(fg.has_value());
  for (const auto& fg : opt.v.d_filters[1]) CHECK(fg.has_value());
}

TEST_CASE("gradient shape mismatches are rejected", "[adam]") {
  NetworkSpec net = testsupport::make_net({2, 3, 2}, simple_lif_coeffs(),
                                          NeuronParams{}, 11);
  NetworkSpec other = testsupport::make_net({2, 4, 2}, simple_lif_coeffs(),
                                            NeuronParams{}, 11);
  AdamState opt = AdamState::init(net);
  const Gradients wrong = Gradients::zeros_like(other);
  CHECK_THROWS_AS(adam_step(net, wrong, opt), std::invalid_argument);

  NetworkSpec single = testsupport::make_net({2, 2}, simple_lif_coeffs(),
                                             NeuronParams{}, 11);
  const Gradients too_few = Gradients::zeros_like(single);
  CHECK_THROWS_AS(adam_step(net, too_few, opt), std::invalid_argument);
}
