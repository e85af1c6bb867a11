// Copyright 2026 The lpsnet Authors
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

// Finite-difference checks of every differentiable op, block and interaction.
// Built against the double-precision library.

#include <cmath>
#include <functional>
#include <random>

#include <gtest/gtest.h>

#include "lpsnet/autograd.h"
#include "lpsnet/blocks.h"
#include "lpsnet/interaction.h"
#include "lpsnet/network.h"
#include "lpsnet/ops.h"

namespace lpsnet {
namespace {

static_assert(sizeof(Real) == sizeof(double), "gradient checks need the f64 build");

Tensor random_tensor(Dims d, std::mt19937& rng, double lo = -1.0, double hi = 1.0) {
  Tensor t(d);
  std::uniform_real_distribution<double> u(lo, hi);
  for (auto& v : t.values()) v = u(rng);
  return t;
}

// sum_i x_i * w_i, so every output element gets a distinct upstream gradient.
Var weighted_sum(const Var& x, const Tensor& w) {
  double s = 0.0;
  for (std::size_t i = 0; i < w.size(); ++i) s += x.value()[i] * w[i];
  Tensor out(Dims{1, 1, 1, 1}, s);
  return make_result(std::move(out), {x}, [w](Node& self) {
    Tensor& g = self.inputs[0]->ensure_grad();
    const double up = self.grad[0];
    for (std::size_t i = 0; i < w.size(); ++i) g[i] += up * w[i];
  });
}

using Loss = std::function<Var()>;

// Relative error per entry. The denominator never drops below `floor`, nor
// below relative_floor times the largest analytic gradient entry: inside
// normalized blocks some entries are zero up to roundoff and would otherwise
// compare two noise values.
double max_rel_error(const Loss& loss, std::vector<Var> inputs, double eps = 1e-6,
                     double floor = 1e-7, double relative_floor = 0.0) {
  for (auto& v : inputs) v.zero_grad();
  backward(loss());
  double scale = 0.0;
  for (auto& v : inputs) {
    for (double g : v.grad().values()) scale = std::max(scale, std::abs(g));
  }
  floor = std::max(floor, relative_floor * scale);
  double worst = 0.0;
  for (auto& v : inputs) {
    Tensor analytic = v.grad();
    Tensor& x = v.mutable_value();
    for (std::size_t i = 0; i < x.size(); ++i) {
      const double orig = x[i];
      x[i] = orig + eps;
      const double up = loss().value()[0];
      x[i] = orig - eps;
      const double down = loss().value()[0];
      x[i] = orig;
      const double numeric = (up - down) / (2 * eps);
      const double denom = std::max({std::abs(numeric), std::abs(analytic[i]), floor});
      worst = std::max(worst, std::abs(numeric - analytic[i]) / denom);
    }
  }
  return worst;
}

class OpGradientTest : public ::testing::Test {
 protected:
  std::mt19937 rng{42};
  Var input(Dims d) { return Var(random_tensor(d, rng), true); }
  Tensor weights(Dims d) { return random_tensor(d, rng); }
};

TEST_F(OpGradientTest, Conv2d) {
  struct Case {
    int cin, cout, k, stride, groups;
  };
  for (Case c : {Case{3, 4, 3, 1, 1}, Case{3, 4, 3, 2, 1}, Case{4, 6, 1, 1, 1},
                 Case{4, 4, 3, 2, 4}, Case{4, 4, 1, 2, 1}, Case{6, 4, 3, 1, 2}}) {
    Var x = input({2, c.cin, 7, 6});
    Var w = input({c.cout, c.cin / c.groups, c.k, c.k});
    Var b = input({c.cout, 1, 1, 1});
    const int oh = (7 + c.stride - 1) / c.stride, ow = (6 + c.stride - 1) / c.stride;
    Tensor r = weights({2, c.cout, oh, ow});
    auto loss = [&] { return weighted_sum(ops::conv2d(x, w, b, c.stride, c.groups), r); };
    // The loss is linear in each input, so a wide step adds no truncation error.
    EXPECT_LT(max_rel_error(loss, {x, w, b}, 1e-3), 1e-6)
        << c.cin << "->" << c.cout << " k" << c.k << " s" << c.stride << " g" << c.groups;
  }
}

TEST_F(OpGradientTest, BatchNormTraining) {
  Var x = input({3, 4, 3, 5});
  Var g = input({4, 1, 1, 1});
  Var b = input({4, 1, 1, 1});
  Tensor mean(Dims{4, 1, 1, 1}), var(Dims{4, 1, 1, 1}, 1.0);
  Tensor r = weights(x.dims());
  auto loss = [&] { return weighted_sum(ops::batch_norm(x, g, b, {&mean, &var}, true), r); };
  EXPECT_LT(max_rel_error(loss, {x, g, b}), 1e-5);
}

TEST_F(OpGradientTest, BatchNormEval) {
  Var x = input({2, 3, 4, 4});
  Var g = input({3, 1, 1, 1});
  Var b = input({3, 1, 1, 1});
  Tensor mean = weights({3, 1, 1, 1}), var = random_tensor({3, 1, 1, 1}, rng, 0.5, 2.0);
  Tensor r = weights(x.dims());
  auto loss = [&] { return weighted_sum(ops::batch_norm(x, g, b, {&mean, &var}, false), r); };
  EXPECT_LT(max_rel_error(loss, {x, g, b}), 1e-6);
}

TEST_F(OpGradientTest, Pointwise) {
  Var x = input({2, 3, 4, 5});
  Tensor r = weights(x.dims());
  EXPECT_LT(max_rel_error([&] { return weighted_sum(ops::relu(x), r); }, {x}), 1e-6);
  EXPECT_LT(max_rel_error([&] { return weighted_sum(ops::sigmoid(x), r); }, {x}), 1e-6);
  EXPECT_LT(max_rel_error([&] { return weighted_sum(ops::one_minus(x), r); }, {x}), 1e-6);
  Var y = input(x.dims());
  EXPECT_LT(max_rel_error([&] { return weighted_sum(ops::add(x, y), r); }, {x, y}), 1e-6);
  Var gate = input({2, 1, 4, 5});
  EXPECT_LT(max_rel_error([&] { return weighted_sum(ops::mul_broadcast(x, gate), r); },
                          {x, gate}),
            1e-6);
}

TEST_F(OpGradientTest, ResizeBilinear) {
  Var x = input({2, 3, 5, 7});
  for (auto [oh, ow] : {std::pair{10, 14}, {3, 4}, {8, 5}, {1, 1}}) {
    Tensor r = weights({2, 3, oh, ow});
    auto loss = [&] { return weighted_sum(ops::resize_bilinear(x, oh, ow), r); };
    EXPECT_LT(max_rel_error(loss, {x}), 1e-6) << oh << "x" << ow;
  }
}

TEST_F(OpGradientTest, ChannelOps) {
  Var a = input({2, 2, 3, 3});
  Var b = input({2, 4, 3, 3});
  Tensor r6 = weights({2, 6, 3, 3});
  auto concat = [&] {
    std::array<Var, 2> parts = {a, b};
    return weighted_sum(ops::concat_channels(parts), r6);
  };
  EXPECT_LT(max_rel_error(concat, {a, b}), 1e-6);
  Tensor r3 = weights({2, 3, 3, 3});
  EXPECT_LT(max_rel_error([&] { return weighted_sum(ops::slice_channels(b, 1, 3), r3); }, {b}),
            1e-6);
  Tensor r4 = weights({2, 4, 3, 3});
  EXPECT_LT(max_rel_error([&] { return weighted_sum(ops::channel_shuffle(b, 2), r4); }, {b}),
            1e-6);
}

TEST_F(OpGradientTest, CrossEntropy) {
  Var logits = input({2, 4, 3, 5});
  LabelMap labels(2, 3, 5);
  std::uniform_int_distribution<int> cls(0, 3);
  for (auto& v : labels.data) v = std::uint8_t(cls(rng));
  labels.data[0] = kIgnoreLabel;
  labels.data[7] = kIgnoreLabel;
  EXPECT_LT(max_rel_error([&] { return ops::cross_entropy(logits, labels); }, {logits}), 1e-6);
}

// Whole-block checks with every parameter perturbed.
class BlockGradientTest : public ::testing::TestWithParam<BlockKind> {};

TEST_P(BlockGradientTest, MatchesFiniteDifferences) {
  std::mt19937 rng(7);
  for (auto [cin, cout, stride] : {std::tuple{4, 8, 2}, {8, 8, 1}}) {
    ParameterSet ps;
    ParamBuilder b(5, ps);
    auto block = make_block(GetParam(), b, "b", cin, cout, stride);
    Var x(random_tensor({2, cin, 6, 6}, rng), true);
    const int o = (6 + stride - 1) / stride;
    Tensor r = random_tensor({2, cout, o, o}, rng);
    std::vector<Var> vars = {x};
    for (auto& [name, v] : ps.params) vars.push_back(v);
    auto loss = [&] { return weighted_sum(block->forward(x, true), r); };
    EXPECT_LT(max_rel_error(loss, vars, 1e-6, 1e-6, 1e-3), 1e-4)
        << to_string(GetParam()) << " " << cin << "->" << cout << " s" << stride;
  }
}

INSTANTIATE_TEST_SUITE_P(AllKinds, BlockGradientTest, ::testing::ValuesIn(kAllBlockKinds),
                         [](const auto& info) { return std::string(to_string(info.param)); });

class InteractionGradientTest : public ::testing::TestWithParam<InteractionKind> {};

TEST_P(InteractionGradientTest, MatchesFiniteDifferences) {
  std::mt19937 rng(9);
  ParameterSet ps;
  ParamBuilder b(3, ps);
  auto module = make_interaction(GetParam(), b, "i", 4);
  Var high(random_tensor({2, 4, 6, 8}, rng), true);
  Var low(random_tensor({2, 4, 3, 4}, rng), true);
  Tensor rh = random_tensor(high.dims(), rng), rl = random_tensor(low.dims(), rng);
  std::vector<Var> vars = {high, low};
  for (auto& [name, v] : ps.params) vars.push_back(v);
  auto loss = [&] {
    FeaturePair out = module->forward(high, low, true);
    return ops::add(weighted_sum(out.high, rh), weighted_sum(out.low, rl));
  };
  EXPECT_LT(max_rel_error(loss, vars, 1e-6, 1e-6, 1e-3), 1e-4) << to_string(GetParam());
}

INSTANTIATE_TEST_SUITE_P(AllKinds, InteractionGradientTest,
                         ::testing::ValuesIn(kAllInteractionKinds),
                         [](const auto& info) { return std::string(to_string(info.param)); });

TEST(NetworkGradientTest, TinyNetworkEndToEnd) {
  std::mt19937 rng(1);
  const NetworkSpec spec = apply(initial_spec(), catalog()[8], 2);  // two paths
  NetworkInstance net =
      NetworkInstance::build(spec, BlockKind::kConv3x3, InteractionKind::kBilateralB, 3, 17);
  Var images(random_tensor({2, 3, 64, 64}, rng, 0.0, 1.0));
  LabelMap labels(2, 64, 64);
  std::uniform_int_distribution<int> cls(0, 2);
  for (auto& v : labels.data) v = std::uint8_t(cls(rng));
  auto loss = [&] { return ops::cross_entropy(net.forward(images, true), labels); };

  net.parameters().zero_grad();
  backward(loss());
  std::uniform_int_distribution<std::size_t> pick_param(0, net.parameters().params.size() - 1);
  double worst = 0.0;
  for (int n = 0; n < 40; ++n) {
    Var& p = net.parameters().params[pick_param(rng)].second;
    std::uniform_int_distribution<std::size_t> pick_elem(0, p.value().size() - 1);
    const std::size_t i = pick_elem(rng);
    const double analytic = p.grad()[i];
    Tensor& w = p.mutable_value();
    const double orig = w[i], eps = 1e-6;
    w[i] = orig + eps;
    const double up = loss().value()[0];
    w[i] = orig - eps;
    const double down = loss().value()[0];
    w[i] = orig;
    const double numeric = (up - down) / (2 * eps);
    worst = std::max(worst, std::abs(numeric - analytic) /
                                std::max({std::abs(numeric), std::abs(analytic), 1e-8}));
  }
  EXPECT_LT(worst, 1e-4);
}

}  // namespace
}  // namespace lpsnet
