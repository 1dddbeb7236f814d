#include <gtest/gtest.h>

#include <cmath>

#include "dtl/error.hpp"
#include "dtl/network.hpp"
#include "support.hpp"

using namespace dtl;
using dtl::testing::check_gradients;
using dtl::testing::random_network;
using dtl::testing::random_tensor;

namespace {

Network identity_dense(std::size_t n) {
  Network net({1, 1, n});
  net.flatten().dense(n).softmax();
  auto& w = net.layer(1).params.weights;
  for (std::size_t i = 0; i < n; ++i) w[i * n + i] = 1.0;
  return net;
}

}  // namespace

TEST(Network, BuilderChainsShapes) {
  Network net({1, 28, 28});
  net.conv2d(20, 5).relu().maxpool(2).flatten().dense(10).softmax();
  EXPECT_EQ(net.layer(0).out_shape, (Shape{20, 24, 24}));
  EXPECT_EQ(net.layer(2).out_shape, (Shape{20, 12, 12}));
  EXPECT_EQ(net.layer(3).out_shape, (Shape{2880}));
  for (std::size_t i = 0; i + 1 < net.depth(); ++i) EXPECT_EQ(net.layer(i).out_shape, net.layer(i + 1).in_shape);
  EXPECT_EQ(net.class_count(), 10u);
  EXPECT_EQ(net.parameter_count(), 20u * 25 + 20 + 2880 * 10 + 10);
  EXPECT_EQ(net.descriptor(), "in=1x28x28;conv2d:20x5;relu;maxpool:2;flatten;dense:10;softmax");
}

TEST(Network, BuilderRejectsBadChains) {
  Network net({1, 4, 4});
  EXPECT_THROW(net.conv2d(1, 5), ShapeError);
  EXPECT_THROW(net.dense(3), ShapeError);
  net.flatten().dense(3).softmax();
  EXPECT_THROW(net.relu(), ShapeError);
}

TEST(Network, DescriptorRoundTrip) {
  Network net({3, 32, 32});
  net.conv2d(4, 3).relu().maxpool(2).flatten().dense(7).relu().dense(5).softmax();
  const Network back = Network::from_descriptor(net.descriptor());
  EXPECT_EQ(back.descriptor(), net.descriptor());
  EXPECT_EQ(back.parameter_count(), net.parameter_count());
  EXPECT_THROW(Network::from_descriptor("in=1x4x4;bogus;softmax"), ShapeError);
}

TEST(Network, InitializationIsBoundedAndSeeded) {
  Network a({1, 8, 8});
  a.conv2d(3, 3).relu().flatten().dense(4).softmax();
  Network b = a;
  a.initialize(5);
  b.initialize(5);
  EXPECT_EQ(a, b);
  const double s = std::sqrt(6.0 / (9.0 + 27.0));
  for (double w : a.layer(0).params.weights.values()) EXPECT_LE(std::abs(w), s);
  for (double v : a.layer(0).params.biases.values()) EXPECT_EQ(v, 0.0);
  b.initialize(6);
  EXPECT_NE(a, b);
}

TEST(Forward, IdentityDensePassesInputThrough) {
  const Network net = identity_dense(4);
  const Tensor x({1, 1, 4}, std::vector<double>{0.1, -2.0, 3.5, 0.0});
  const auto logits = predict_logits(net, x);
  for (std::size_t i = 0; i < 4; ++i) EXPECT_EQ(logits[i], x[i]);
}

TEST(Forward, ZeroInputGivesRectifiedBias) {
  for (double beta : {0.7, -0.3}) {
    Network net({1, 5, 5});
    net.conv2d(1, 3).relu().flatten().dense(2).softmax();
    net.layer(0).params.weights.fill(0.4);
    net.layer(0).params.biases[0] = beta;
    const auto fwd = forward(net, Tensor({1, 5, 5}, 0.0));
    const Tensor& relu_out = fwd.trace.activations[2];
    ASSERT_EQ(relu_out.shape(), (Shape{1, 3, 3}));
    for (double v : relu_out.values()) EXPECT_EQ(v, std::max(beta, 0.0));
  }
}

TEST(Forward, HandConvolution) {
  Network net({1, 3, 3});
  net.conv2d(1, 2).flatten().dense(2).softmax();
  net.layer(0).params.weights = Tensor({1, 1, 2, 2}, std::vector<double>{1, 0, 0, -1});
  const auto fwd = forward(net, Tensor({1, 3, 3}, std::vector<double>{1, 2, 3, 4, 5, 6, 7, 8, 9}));
  EXPECT_EQ(fwd.trace.activations[1], Tensor({1, 2, 2}, -4.0));
}

TEST(Forward, ShapeMismatchNamesLayer) {
  const Network net = identity_dense(3);
  try {
    forward(net, Tensor({1, 1, 4}));
    FAIL() << "expected ShapeError";
  } catch (const ShapeError& e) {
    EXPECT_NE(std::string(e.what()).find("layer 0"), std::string::npos);
    EXPECT_NE(std::string(e.what()).find("1x1x3"), std::string::npos);
  }
}

TEST(Forward, TraceShapesFollowLayerSpecs) {
  Rng rng(11);
  for (int k = 0; k < 20; ++k) {
    const Network net = random_network(rng);
    const auto fwd = forward(net, random_tensor(net.input_shape(), rng));
    ASSERT_EQ(fwd.trace.activations.size(), net.depth());
    for (std::size_t l = 0; l + 1 < net.depth(); ++l)
      EXPECT_EQ(fwd.trace.activations[l + 1].shape(), net.layer(l).out_shape);
    EXPECT_TRUE(fwd.logits.all_finite());
  }
}

TEST(OutputError, UniformLogits) {
  for (std::size_t c : {2u, 3u, 10u}) {
    const auto e = output_error(Tensor({c}, 0.37), 1);
    EXPECT_NEAR(e.loss, std::log(static_cast<double>(c)), 1e-12);
    for (std::size_t i = 0; i < c; ++i) EXPECT_NEAR(e.delta[i], 1.0 / c - (i == 1 ? 1.0 : 0.0), 1e-12);
  }
}

TEST(OutputError, TwoClassClosedForm) {
  const auto e = output_error(Tensor({2}, std::vector<double>{1.0, 0.0}), 0);
  const double p0 = std::exp(1.0) / (std::exp(1.0) + 1.0);
  EXPECT_NEAR(p0, 0.7311, 1e-4);
  EXPECT_NEAR(e.loss, -std::log(p0), 1e-12);
  EXPECT_NEAR(e.loss, 0.3133, 1e-4);
  EXPECT_NEAR(e.delta[0], -0.2689, 1e-4);
  EXPECT_NEAR(e.delta[1], 0.2689, 1e-4);
}

TEST(OutputError, ConfidentCorrectLimit) {
  double previous = 1e9;
  for (double m : {1.0, 5.0, 20.0, 50.0}) {
    Tensor logits({4}, 0.0);
    logits[2] = m;
    const auto e = output_error(logits, 2);
    EXPECT_GE(e.loss, 0.0);
    EXPECT_LT(e.loss, previous);
    previous = e.loss;
  }
  Tensor logits({4}, 0.0);
  logits[2] = 50.0;
  const auto e = output_error(logits, 2);
  EXPECT_LT(e.loss, 1e-20);
  for (double d : e.delta.values()) EXPECT_LT(std::abs(d), 1e-20);
  EXPECT_THROW(output_error(logits, 4), InvalidArgument);
}

TEST(OutputError, LossIsNonNegative) {
  Rng rng(4);
  for (int k = 0; k < 1000; ++k) {
    const Tensor logits = random_tensor({5}, rng, -30.0, 30.0);
    const auto e = output_error(logits, rng.below(5));
    EXPECT_GE(e.loss, 0.0);
    EXPECT_TRUE(std::isfinite(e.loss));
  }
}

TEST(Backward, ZeroDeltaGivesZeroGradients) {
  Rng rng(5);
  const Network net = random_network(rng);
  const auto fwd = forward(net, random_tensor(net.input_shape(), rng));
  const auto grads = backward(net, fwd.trace, Tensor({net.class_count()}, 0.0));
  for (const auto& g : grads.layers) {
    for (double v : g.weights.values()) EXPECT_EQ(v, 0.0);
    for (double v : g.biases.values()) EXPECT_EQ(v, 0.0);
  }
}

TEST(Backward, SingleLinearLayerIsOuterProduct) {
  Network net({1, 1, 3});
  net.flatten().dense(2).softmax();
  net.initialize(1);
  const Tensor x({1, 1, 3}, std::vector<double>{0.5, -1.0, 2.0});
  const Tensor delta({2}, std::vector<double>{0.25, -3.0});
  const auto fwd = forward(net, x);
  const auto grads = backward(net, fwd.trace, delta);
  for (std::size_t o = 0; o < 2; ++o) {
    for (std::size_t i = 0; i < 3; ++i) EXPECT_EQ(grads.layers[1].weights[o * 3 + i], delta[o] * x[i]);
    EXPECT_EQ(grads.layers[1].biases[o], delta[o]);
  }
}

TEST(Backward, MatchesFiniteDifferences) {
  Rng rng(6);
  for (int k = 0; k < 15; ++k) {
    const Network net = random_network(rng);
    const Tensor x = random_tensor(net.input_shape(), rng);
    const auto r = check_gradients(net, x, rng.below(net.class_count()));
    EXPECT_EQ(r.failures, 0u) << net.descriptor() << " worst excess " << r.worst_excess;
    EXPECT_EQ(r.checked, net.parameter_count());
  }
}

TEST(Backward, FrozenLayersGetNoGradient) {
  Rng rng(8);
  Network net = random_network(rng);
  net.freeze_below(1);
  const auto fwd = forward(net, random_tensor(net.input_shape(), rng));
  const auto grads = backward(net, fwd.trace, output_error(fwd.logits, 0).delta);
  for (double v : grads.layers[0].weights.values()) EXPECT_EQ(v, 0.0);
}

TEST(Backward, RejectsForeignTrace) {
  Rng rng(9);
  const Network a = random_network(rng);
  Network b({1, 2, 2});
  b.flatten().dense(2).softmax();
  const auto fwd = forward(a, random_tensor(a.input_shape(), rng));
  EXPECT_THROW(backward(b, fwd.trace, Tensor({2}, 0.0)), ShapeError);
}

TEST(SgdStep, ZeroCostLeavesParametersBitwise) {
  Rng rng(10);
  Network net = random_network(rng);
  const Network before = net;
  const auto fwd = forward(net, random_tensor(net.input_shape(), rng));
  const auto grads = backward(net, fwd.trace, output_error(fwd.logits, 0).delta);
  sgd_step(net, grads, 0.5, 0.0);
  EXPECT_EQ(net, before);
}

TEST(SgdStep, HandArithmetic) {
  Network net({1, 1, 1});
  net.flatten().dense(2).softmax();
  net.layer(1).params.weights.fill(1.0);
  Gradients g = Gradients::zeros_like(net);
  g.layers[1].weights.fill(0.5);
  sgd_step(net, g, 0.1, 0.4);
  EXPECT_DOUBLE_EQ(net.layer(1).params.weights[0], 0.98);
}

TEST(SgdStep, NeutralCostIsPlainSgdAndUpdateIsLinear) {
  Rng rng(12);
  for (int k = 0; k < 20; ++k) {
    Network net = random_network(rng);
    const auto fwd = forward(net, random_tensor(net.input_shape(), rng));
    const auto grads = backward(net, fwd.trace, output_error(fwd.logits, 0).delta);
    const double eta = rng.uniform(0.001, 0.5);
    const double gamma = rng.uniform(0.0, 2.0);

    Network scaled = net, folded = net, neutral = net, plain = net;
    sgd_step(scaled, grads, eta, gamma);
    sgd_step(folded, grads, eta * gamma, 1.0);
    EXPECT_EQ(scaled, folded);

    sgd_step(neutral, grads, eta, 1.0);
    for (std::size_t l = 0; l < plain.depth(); ++l) {
      if (!plain.layer(l).has_params()) continue;
      auto& p = plain.layer(l).params;
      for (std::size_t i = 0; i < p.weights.size(); ++i) p.weights[i] -= eta * grads.layers[l].weights[i];
      for (std::size_t i = 0; i < p.biases.size(); ++i) p.biases[i] -= eta * grads.layers[l].biases[i];
    }
    EXPECT_EQ(neutral, plain);
  }
}

TEST(SgdStep, ValidatesArguments) {
  Rng rng(13);
  Network net = random_network(rng);
  const Gradients g = Gradients::zeros_like(net);
  EXPECT_THROW(sgd_step(net, g, 0.0, 1.0), InvalidArgument);
  EXPECT_THROW(sgd_step(net, g, 0.1, -1.0), InvalidArgument);
  Network other({1, 2, 2});
  other.flatten().dense(2).softmax();
  EXPECT_THROW(sgd_step(other, g, 0.1, 1.0), ShapeError);
}
