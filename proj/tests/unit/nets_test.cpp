// Copyright 2026 The curled-wm Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#include "curled/nets.hpp"

#include <gtest/gtest.h>

#include <cmath>

#include "curled/errors.hpp"

namespace curled {
namespace {

constexpr std::size_t kHidden[] = {6, 5};

Tensor random_input(std::size_t rows, std::size_t cols, Rng& rng, double lo = -1.0, double hi = 1.0) {
  std::vector<double> v(rows * cols);
  for (double& x : v) x = rng.uniform(lo, hi);
  return Tensor(Shape{rows, cols}, std::move(v));
}

void zero_all(Mlp& mlp) {
  for (auto& l : mlp.layers) {
    std::fill(l.weight.data.begin(), l.weight.data.end(), 0.0);
    std::fill(l.bias.data.begin(), l.bias.data.end(), 0.0);
  }
}

void zero_last(Mlp& mlp) {
  auto& l = mlp.layers.back();
  std::fill(l.weight.data.begin(), l.weight.data.end(), 0.0);
  std::fill(l.bias.data.begin(), l.bias.data.end(), 0.0);
}

ModelSpec small_spec() {
  ModelSpec spec;
  spec.observation_dim = 12;
  spec.latent_dim = 4;
  spec.action_dim = 2;
  spec.hidden = {6, 5};
  return spec;
}

TEST(Mlp, GlorotBoundsAndZeroBias) {
  Rng rng(1);
  const Mlp mlp = make_mlp("net", 10, kHidden, 3, OutputSquash::identity, rng);
  ASSERT_EQ(mlp.layers.size(), 3u);
  const std::size_t dims[] = {10, 6, 5, 3};
  for (std::size_t l = 0; l < 3; ++l) {
    const double limit = std::sqrt(6.0 / static_cast<double>(dims[l] + dims[l + 1]));
    EXPECT_EQ(mlp.layers[l].weight.shape, (Shape{dims[l], dims[l + 1]}));
    for (double w : mlp.layers[l].weight.data) EXPECT_LE(std::abs(w), limit);
    for (double b : mlp.layers[l].bias.data) EXPECT_EQ(b, 0.0);
  }
  EXPECT_EQ(mlp.parameter_count(), 10u * 6 + 6 + 6 * 5 + 5 + 5 * 3 + 3);
}

TEST(Mlp, SeededInitIsReproducible) {
  Rng a(9), b(9);
  EXPECT_EQ(init_model(small_spec(), a), init_model(small_spec(), b));
}

TEST(Encode, ShapeContract) {
  Rng rng(2);
  const Mlp enc = make_mlp("encoder", 32 * 32, kHidden, 32, OutputSquash::identity, rng);
  const BoundMlp b = bind(enc, false);
  EXPECT_EQ(encode(b, random_input(5, 1024, rng)).shape(), (Shape{5, 32}));
  EXPECT_THROW(encode(b, random_input(5, 1000, rng)), ShapeError);
}

TEST(Encode, ZeroWeightsGiveZeroLatents) {
  Rng rng(3);
  Mlp enc = make_mlp("encoder", 12, kHidden, 4, OutputSquash::identity, rng);
  zero_all(enc);
  const Tensor z = encode(bind(enc, false), random_input(3, 12, rng));
  for (double v : z.data()) EXPECT_EQ(v, 0.0);
}

TEST(Encode, IdenticalInputsGiveIdenticalOutputs) {
  Rng rng(4);
  const BoundMlp b = bind(make_mlp("encoder", 12, kHidden, 4, OutputSquash::identity, rng), false);
  const Tensor x = random_input(2, 12, rng);
  const Tensor y1 = encode(b, x);
  const Tensor y2 = encode(b, x);
  EXPECT_TRUE(std::equal(y1.data().begin(), y1.data().end(), y2.data().begin()));
}

TEST(Decode, OutputsInUnitInterval) {
  Rng rng(5);
  const BoundMlp dec = bind(make_mlp("decoder", 4, kHidden, 16, OutputSquash::sigmoid, rng), false);
  const Tensor out = decode(dec, random_input(1000, 4, rng, -10.0, 10.0));
  EXPECT_EQ(out.shape(), (Shape{1000, 16}));
  for (double v : out.data()) {
    EXPECT_GE(v, 0.0);
    EXPECT_LE(v, 1.0);
  }
}

TEST(Decode, ZeroFinalLayerGivesOneHalf) {
  Rng rng(6);
  Mlp dec = make_mlp("decoder", 4, kHidden, 16, OutputSquash::sigmoid, rng);
  zero_last(dec);
  const Tensor y = decode(bind(dec, false), random_input(3, 4, rng));
  for (double v : y.data()) EXPECT_EQ(v, 0.5);
  EXPECT_THROW(decode(bind(dec, false), random_input(3, 5, rng)), ShapeError);
}

TEST(WorldModel, DynamicsAndRewardShapes) {
  Rng rng(7);
  const ModelParams m = init_model(small_spec(), rng);
  const BoundModel b = bind(m);
  const Tensor z = random_input(3, 4, rng);
  const Tensor a = random_input(3, 2, rng);
  EXPECT_EQ(predict_dynamics(b.dynamics, z, a).shape(), (Shape{3, 4}));
  EXPECT_EQ(predict_reward(b.reward, z, a).shape(), (Shape{3, 1}));
  EXPECT_THROW(predict_dynamics(b.dynamics, z, random_input(3, 1, rng)), ShapeError);
  EXPECT_THROW(predict_reward(b.reward, z, random_input(2, 2, rng)), ShapeError);
}

TEST(Policy, MeanModeWithZeroHeadIsZeroAction) {
  Rng rng(8);
  Mlp pol = make_mlp("policy", 4, kHidden, 4, OutputSquash::identity, rng);
  zero_last(pol);
  const PolicyOutput out = policy_act(bind(pol, false), random_input(3, 4, rng), ActionMode::mean, rng);
  for (double v : out.action.data()) EXPECT_EQ(v, 0.0);
}

TEST(Policy, StochasticSamplesStayInsideOpenInterval) {
  Rng rng(9);
  Mlp pol = make_mlp("policy", 4, kHidden, 4, OutputSquash::identity, rng);
  // Large head biases push the pre-squash mean far out; tanh must still stay inside.
  pol.layers.back().bias.data = {3.0, -3.0, 5.0, 5.0};
  const BoundMlp b = bind(pol, false);
  const PolicyOutput out = policy_act(b, random_input(5000, 4, rng), ActionMode::stochastic, rng);
  ASSERT_EQ(out.action.size(), 10000u);
  for (double v : out.action.data()) {
    EXPECT_GT(v, -1.0);
    EXPECT_LT(v, 1.0);
  }
  for (double v : out.log_std.data()) {
    EXPECT_GE(v, kMinLogStd);
    EXPECT_LE(v, kMaxLogStd);
  }
}

TEST(Policy, StochasticModeIsReproducibleGivenSeed) {
  Rng init(10);
  const BoundMlp b = bind(make_mlp("policy", 4, kHidden, 4, OutputSquash::identity, init), false);
  const Tensor z = random_input(3, 4, init);
  Rng r1(77), r2(77);
  const Tensor a1 = policy_act(b, z, ActionMode::stochastic, r1).action;
  const Tensor a2 = policy_act(b, z, ActionMode::stochastic, r2).action;
  EXPECT_TRUE(std::equal(a1.data().begin(), a1.data().end(), a2.data().begin()));
}

TEST(Policy, ReparameterizedPathReachesMeanHead) {
  Rng init(11);
  const BoundMlp b = bind(make_mlp("policy", 4, kHidden, 4, OutputSquash::identity, init), true);
  const Tensor z = random_input(3, 4, init);
  const ScalarFunction f = [&](std::span<const Tensor>) {
    Rng r(5);
    return sum(policy_act(b, z, ActionMode::stochastic, r).action);
  };
  const Tensor& last_bias = b.layers.back().bias;
  const GradientMap g = backward(f({}));
  const auto grad = g.values_or_zero(last_bias);
  EXPECT_NE(grad[0], 0.0);
  EXPECT_NE(grad[1], 0.0);
  EXPECT_LT(finite_difference_check(f, b.leaves()).max_relative_error, 1e-4);
}

TEST(Networks, AllFivePassFiniteDifferences) {
  Rng rng(12);
  ModelParams m = init_model(small_spec(), rng);
  for (Param* p : m.all()) {
    for (double& x : p->data) x += rng.uniform(-0.2, 0.2);
  }
  const BoundModel b = bind(m);
  const Tensor obs = random_input(3, 12, rng, 0.0, 1.0);
  const Tensor z = random_input(3, 4, rng);
  const Tensor a = random_input(3, 2, rng);
  const Tensor probe_z = random_input(3, 4, rng);
  const Tensor probe_x = random_input(3, 12, rng);
  auto check = [](const ScalarFunction& f, const BoundMlp& net) {
    return finite_difference_check(f, net.leaves()).max_relative_error;
  };
  EXPECT_LT(check([&](auto) { return sum(multiply(encode(b.encoder, obs), probe_z)); }, b.encoder), 1e-4);
  EXPECT_LT(check([&](auto) { return sum(multiply(decode(b.decoder, z), probe_x)); }, b.decoder), 1e-4);
  EXPECT_LT(check([&](auto) { return sum(multiply(predict_dynamics(b.dynamics, z, a), probe_z)); }, b.dynamics),
            1e-4);
  EXPECT_LT(check([&](auto) { return sum(predict_reward(b.reward, z, a)); }, b.reward), 1e-4);
  EXPECT_LT(check(
                [&](auto) {
                  Rng r(3);
                  return sum(policy_act(b.policy, z, ActionMode::stochastic, r).action);
                },
                b.policy),
            1e-4);
}

TEST(Bind, FrozenLeavesCarryNoGradient) {
  Rng rng(13);
  const BoundMlp live = bind(make_mlp("encoder", 12, kHidden, 4, OutputSquash::identity, rng), true);
  const BoundMlp ice = frozen(live);
  EXPECT_TRUE(backward(sum(encode(ice, random_input(2, 12, rng)))).empty());
  EXPECT_FALSE(backward(sum(encode(live, random_input(2, 12, rng)))).empty());
}

TEST(ModelParams, TrainableExcludesTargetEncoder) {
  Rng rng(14);
  ModelParams m = init_model(small_spec(), rng);
  EXPECT_EQ(m.target_encoder.layers[0].weight.data, m.encoder.layers[0].weight.data);
  for (const Param* p : m.trainable()) EXPECT_EQ(p->name.find("target_encoder"), std::string::npos) << p->name;
  EXPECT_EQ(m.all().size(), m.trainable().size() + 2 * m.target_encoder.layers.size());
  EXPECT_EQ(bind(m).trainable_leaves().size(), m.trainable().size());
  const std::size_t d = 4;
  for (std::size_t i = 0; i < d; ++i)
    for (std::size_t j = 0; j < d; ++j) EXPECT_EQ(m.bilinear.data[i * d + j], i == j ? 1.0 : 0.0);
}

TEST(Ema, ClosedFormAtZeroHalfAndOne) {
  Rng rng(15);
  const Mlp online = make_mlp("encoder", 3, kHidden, 2, OutputSquash::identity, rng);
  Mlp target = make_mlp("encoder", 3, kHidden, 2, OutputSquash::identity, rng);
  const Mlp original = target;

  Mlp t1 = target;
  ema_update(t1, online, 1.0);
  EXPECT_EQ(t1, original);

  Mlp t0 = target;
  ema_update(t0, online, 0.0);
  for (std::size_t l = 0; l < online.layers.size(); ++l) {
    EXPECT_EQ(t0.layers[l].weight.data, online.layers[l].weight.data);
    EXPECT_EQ(t0.layers[l].bias.data, online.layers[l].bias.data);
  }

  Mlp tm = target;
  const Mlp online_before = online;
  ema_update(tm, online, 0.95);
  EXPECT_EQ(online, online_before);
  for (std::size_t l = 0; l < online.layers.size(); ++l) {
    const auto& w = tm.layers[l].weight.data;
    for (std::size_t i = 0; i < w.size(); ++i) {
      EXPECT_EQ(w[i], 0.95 * original.layers[l].weight.data[i] + (1.0 - 0.95) * online.layers[l].weight.data[i]);
    }
  }
}

TEST(Ema, ScalarSubstitution) {
  Mlp target, online;
  target.layers.push_back({{"t.0.weight", {1, 1}, {1.0}}, {"t.0.bias", {1}, {1.0}}});
  online.layers.push_back({{"o.0.weight", {1, 1}, {0.0}}, {"o.0.bias", {1}, {0.0}}});
  ema_update(target, online, 0.95);
  EXPECT_EQ(target.layers[0].weight.data[0], 0.95);
  EXPECT_THROW(ema_update(target, online, 1.5), ContractError);
  EXPECT_THROW(ema_update(target, online, -0.1), ContractError);
}

}  // namespace
}  // namespace curled
