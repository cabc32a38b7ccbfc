#include "owr/embedding.hpp"
#include "owr/error.hpp"
#include "support/reference.hpp"

#include <gtest/gtest.h>

#include <random>

namespace owr {
namespace {

DenseLayer layer(Matrix w, Vector b, Activation a) { return DenseLayer{std::move(w), std::move(b), a}; }

EmbeddingNetwork random_net(std::mt19937_64& rng, std::size_t in, std::vector<std::size_t> hidden, std::size_t out) {
  auto net = EmbeddingNetwork::glorot(in, hidden, out, rng());
  // Nonzero biases so every term of the backward pass is exercised.
  for (auto& l : net.mutable_layers()) l.bias = ref::random_vector(rng, l.output_dim(), 0.3);
  return net;
}

TEST(Forward, IdentityLayerPassesInputThrough) {
  EmbeddingNetwork net({layer(Matrix::Identity(2, 2), Vector::Zero(2), Activation::Identity)});
  EXPECT_EQ(net.forward(Vector{{1.0, 2.0}}), (Vector{{1.0, 2.0}}));
}

TEST(Forward, RectifierZeroesNegatives) {
  // A rectifier output layer is not allowed, so check the hidden rectifier through an identity tail.
  EmbeddingNetwork net({layer(Matrix::Identity(2, 2), Vector::Zero(2), Activation::Rectifier),
                        layer(Matrix::Identity(2, 2), Vector::Zero(2), Activation::Identity)});
  EXPECT_EQ(net.forward(Vector{{-1.0, 2.0}}), (Vector{{0.0, 2.0}}));
}

TEST(Forward, MatchesPlainLoopReimplementation) {
  std::mt19937_64 rng(11);
  for (int trial = 0; trial < 50; ++trial) {
    const auto net = random_net(rng, 4, {7, 5}, 3);
    const auto oracle = ref::copy_layers(net);
    const Vector x = ref::random_vector(rng, 4, 2.0);
    const auto expected = ref::forward(oracle, ref::to_vec(x));
    const Vector got = net.forward(x);
    for (std::size_t i = 0; i < expected.size(); ++i) EXPECT_NEAR(got[i], expected[i], 1e-12);
  }
}

TEST(Forward, CacheAgreesWithForward) {
  std::mt19937_64 rng(12);
  const auto net = random_net(rng, 3, {6, 4}, 2);
  const Vector x = ref::random_vector(rng, 3);
  const auto cache = net.forward_with_cache(x);
  EXPECT_EQ(cache.output, net.forward(x));
  EXPECT_EQ(cache.inputs.size(), net.layer_count());
  EXPECT_EQ(cache.pre_activations.size(), net.layer_count());
}

TEST(Forward, RejectsWrongInputLength) {
  std::mt19937_64 rng(1);
  const auto net = random_net(rng, 3, {4}, 2);
  try {
    (void)net.forward(Vector::Zero(2));
    FAIL() << "expected a shape error";
  } catch (const Error& e) {
    EXPECT_EQ(e.kind(), ErrorKind::Shape);
  }
}

TEST(Network, ValidatesLayerChainAndOutputActivation) {
  EXPECT_THROW(EmbeddingNetwork({layer(Matrix::Zero(3, 2), Vector::Zero(3), Activation::Rectifier),
                                 layer(Matrix::Zero(2, 4), Vector::Zero(2), Activation::Identity)}),
               Error);
  EXPECT_THROW(EmbeddingNetwork({layer(Matrix::Zero(2, 2), Vector::Zero(2), Activation::Rectifier)}), Error);
  Matrix bad = Matrix::Zero(2, 2);
  bad(0, 0) = std::numeric_limits<double>::quiet_NaN();
  EXPECT_THROW(EmbeddingNetwork({layer(bad, Vector::Zero(2), Activation::Identity)}), Error);
}

TEST(Network, GlorotIsSeededAndBounded) {
  const std::vector<std::size_t> hidden{64, 32};
  const auto a = EmbeddingNetwork::glorot(2, hidden, 16, 5);
  const auto b = EmbeddingNetwork::glorot(2, hidden, 16, 5);
  const auto c = EmbeddingNetwork::glorot(2, hidden, 16, 6);
  EXPECT_EQ(a.layers()[0].weight, b.layers()[0].weight);
  EXPECT_NE(a.layers()[0].weight, c.layers()[0].weight);
  EXPECT_EQ(a.parameter_count(), 2u * 64 + 64 + 64 * 32 + 32 + 32 * 16 + 16);
  for (const auto& l : a.layers()) {
    const double limit = std::sqrt(6.0 / static_cast<double>(l.input_dim() + l.output_dim()));
    EXPECT_LE(l.weight.cwiseAbs().maxCoeff(), limit);
    EXPECT_TRUE(l.bias.isZero());
  }
  EXPECT_EQ(a.layers().back().activation, Activation::Identity);
}

TEST(Backward, ZeroUpstreamGivesZeroGradients) {
  std::mt19937_64 rng(3);
  const auto net = random_net(rng, 3, {5}, 2);
  const auto g = net.backward(net.forward_with_cache(ref::random_vector(rng, 3)), Vector::Zero(2));
  EXPECT_TRUE(g.is_zero());
}

TEST(Backward, AffineLayerWeightGradientIsOuterProduct) {
  EmbeddingNetwork net({layer(Matrix::Identity(2, 3), Vector::Zero(2), Activation::Identity)});
  const Vector x{{1.0, -2.0, 0.5}};
  const Vector g{{3.0, 4.0}};
  const auto grads = net.backward(net.forward_with_cache(x), g);
  EXPECT_TRUE(grads.layers()[0].weight.isApprox(g * x.transpose()));
  EXPECT_EQ(grads.layers()[0].bias, g);
}

TEST(Backward, MatchesFiniteDifferencesOfProbeLoss) {
  std::mt19937_64 rng(21);
  for (int trial = 0; trial < 20; ++trial) {
    auto net = random_net(rng, 3, {6, 5}, 4);
    const Vector x = ref::random_vector(rng, 3, 1.5);
    const Vector probe = ref::random_vector(rng, 4);
    const auto grads = net.backward(net.forward_with_cache(x), probe);
    ASSERT_TRUE(grads.all_finite());

    auto probe_loss = [&] {
      const auto f = ref::forward(ref::copy_layers(net), ref::to_vec(x));
      double s = 0.0;
      for (std::size_t i = 0; i < f.size(); ++i) s += probe[static_cast<Eigen::Index>(i)] * f[i];
      return s;
    };
    auto& layers = net.mutable_layers();
    for (std::size_t l = 0; l < layers.size(); ++l) {
      for (Eigen::Index i = 0; i < layers[l].weight.size(); ++i) {
        const double fd = ref::central_difference(probe_loss, layers[l].weight.data()[i]);
        EXPECT_LE(ref::rel_error(grads.layers()[l].weight.data()[i], fd), 1e-4) << "layer " << l << " w" << i;
      }
      for (Eigen::Index i = 0; i < layers[l].bias.size(); ++i) {
        const double fd = ref::central_difference(probe_loss, layers[l].bias[i]);
        EXPECT_LE(ref::rel_error(grads.layers()[l].bias[i], fd), 1e-4) << "layer " << l << " b" << i;
      }
    }
  }
}

TEST(Backward, StaleCacheIsRejected) {
  std::mt19937_64 rng(4);
  const auto a = random_net(rng, 3, {5}, 2);
  const auto b = random_net(rng, 3, {6}, 2);
  const auto cache = a.forward_with_cache(ref::random_vector(rng, 3));
  try {
    (void)b.backward(cache, Vector::Ones(2));
    FAIL() << "expected a shape error";
  } catch (const Error& e) {
    EXPECT_EQ(e.kind(), ErrorKind::Shape);
  }
}

EmbeddingNetwork scalar_net(double w) {
  Matrix m(1, 1);
  m(0, 0) = w;
  return EmbeddingNetwork({layer(m, Vector::Zero(1), Activation::Identity)});
}

ParameterGradients scalar_grad(double g) {
  Matrix m(1, 1);
  m(0, 0) = g;
  return ParameterGradients({LayerGradient{m, Vector::Zero(1)}});
}

TEST(Sgd, PlainStepWithoutMomentumOrDecay) {
  auto net = scalar_net(2.0);
  SgdOptimizer opt({0.1, 0.0, 0.0}, net);
  opt.step(net, scalar_grad(3.0));
  EXPECT_DOUBLE_EQ(net.layers()[0].weight(0, 0), 2.0 - 0.1 * 3.0);
}

TEST(Sgd, MomentumAccumulatesVelocity) {
  auto net = scalar_net(1.0);
  SgdOptimizer opt({0.1, 0.9, 0.0}, net);
  opt.velocity().layers()[0].weight(0, 0) = 1.0;
  opt.step(net, scalar_grad(1.0));
  EXPECT_DOUBLE_EQ(opt.velocity().layers()[0].weight(0, 0), 1.9);
  EXPECT_NEAR(net.layers()[0].weight(0, 0), 1.0 - 0.19, 1e-15);
}

TEST(Sgd, DecayOnlyStepShrinksParameters) {
  auto net = scalar_net(4.0);
  SgdOptimizer opt({1.0, 0.0, 1e-5}, net);
  opt.step(net, scalar_grad(0.0));
  EXPECT_DOUBLE_EQ(net.layers()[0].weight(0, 0), 4.0 - 1e-5 * 4.0);
}

TEST(Sgd, VanillaDescentOnRandomNetworks) {
  std::mt19937_64 rng(8);
  auto net = random_net(rng, 3, {4}, 2);
  const auto before = net.layers();
  const auto g = net.backward(net.forward_with_cache(ref::random_vector(rng, 3)), Vector::Ones(2));
  SgdOptimizer opt({0.05, 0.0, 0.0}, net);
  opt.step(net, g);
  for (std::size_t l = 0; l < before.size(); ++l) {
    EXPECT_EQ(net.layers()[l].weight, before[l].weight - 0.05 * g.layers()[l].weight);
    EXPECT_EQ(net.layers()[l].bias, before[l].bias - 0.05 * g.layers()[l].bias);
  }
}

TEST(Sgd, ClippingRescalesLargeGradients) {
  auto net = scalar_net(0.0);
  SgdOptimizer opt({1.0, 0.0, 0.0, 2.0}, net);
  opt.step(net, scalar_grad(10.0));
  EXPECT_DOUBLE_EQ(net.layers()[0].weight(0, 0), -2.0);
  opt.step(net, scalar_grad(1.0));
  EXPECT_DOUBLE_EQ(net.layers()[0].weight(0, 0), -3.0);
}

TEST(Sgd, NonFiniteUpdateLeavesNetworkUntouched) {
  auto net = scalar_net(1.0);
  SgdOptimizer opt({0.1, 0.9, 0.0}, net);
  try {
    opt.step(net, scalar_grad(std::numeric_limits<double>::infinity()));
    FAIL() << "expected a numeric error";
  } catch (const Error& e) {
    EXPECT_EQ(e.kind(), ErrorKind::Numeric);
  }
  EXPECT_EQ(net.layers()[0].weight(0, 0), 1.0);
}

TEST(Sgd, RejectsInvalidConfig) {
  EXPECT_THROW(SgdConfig({0.0, 0.9, 0.0}).validate(), Error);
  EXPECT_THROW(SgdConfig({0.1, 1.0, 0.0}).validate(), Error);
  EXPECT_THROW(SgdConfig({0.1, 0.5, -1.0}).validate(), Error);
}

TEST(Snapshot, UnaffectedByLaterTraining) {
  std::mt19937_64 rng(9);
  auto net = random_net(rng, 3, {5}, 2);
  const auto snap = snapshot(net);
  const Vector x = ref::random_vector(rng, 3);
  EXPECT_EQ(snap.forward(x), net.forward(x));
  const Vector frozen = snap.forward(x);
  SgdOptimizer opt(SgdConfig{}, net);
  for (int i = 0; i < 10; ++i) opt.step(net, net.backward(net.forward_with_cache(x), Vector::Ones(2)));
  EXPECT_EQ(snap.forward(x), frozen);
  EXPECT_NE(net.forward(x), frozen);
}

}  // namespace
}  // namespace owr
