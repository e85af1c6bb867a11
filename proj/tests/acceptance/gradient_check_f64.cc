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

#include "gradient_check.h"

#include <algorithm>
#include <cmath>
#include <random>

#include "lpsnet/network.h"
#include "lpsnet/ops.h"

namespace lpsnet_acceptance {

static_assert(sizeof(lpsnet::Real) == sizeof(double), "link against lpsnet_core_f64");

GradientCheckResult tiny_network_gradient_check(std::uint64_t seed, int samples, double eps) {
  using namespace lpsnet;
  std::mt19937_64 rng(seed);
  NetworkInstance net = NetworkInstance::build(initial_spec(), BlockKind::kConv3x3,
                                               InteractionKind::kNone, 2, seed);
  Tensor image(Dims{2, 3, 64, 64});
  std::uniform_real_distribution<double> u(0.0, 1.0);
  for (auto& v : image.values()) v = u(rng);
  LabelMap labels(2, 64, 64);
  for (int n = 0; n < 2; ++n) {
    for (int y = 0; y < 64; ++y) {
      for (int x = 0; x < 64; ++x) labels.at(n, y, x) = (x + n * 16) / 32 % 2;
    }
  }
  const Var input(image);
  auto loss = [&] { return ops::cross_entropy(net.forward(input, true), labels); };

  auto& params = net.parameters().params;
  net.parameters().zero_grad();
  backward(loss());

  GradientCheckResult result;
  std::uniform_int_distribution<std::size_t> pick_param(0, params.size() - 1);
  for (int s = 0; s < samples; ++s) {
    auto& [name, p] = params[pick_param(rng)];
    std::uniform_int_distribution<std::size_t> pick_elem(0, p.value().size() - 1);
    const std::size_t i = pick_elem(rng);
    const double analytic = p.grad()[i];
    Tensor& w = p.mutable_value();
    const double orig = w[i];
    w[i] = orig + eps;
    const double up = loss().value()[0];
    w[i] = orig - eps;
    const double down = loss().value()[0];
    w[i] = orig;
    const double numeric = (up - down) / (2 * eps);
    const double rel =
        std::abs(numeric - analytic) / std::max({std::abs(numeric), std::abs(analytic), 1e-10});
    if (rel >= result.max_rel_error) {
      result.max_rel_error = rel;
      result.worst_param = name + "[" + std::to_string(i) + "]";
    }
    ++result.sampled;
  }
  return result;
}

}  // namespace lpsnet_acceptance
