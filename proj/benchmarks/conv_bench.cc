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

#include <random>

#include <benchmark/benchmark.h>

#include "lpsnet/autograd.h"
#include "lpsnet/costmodel.h"
#include "lpsnet/ops.h"

namespace lpsnet {
namespace {

Tensor random_tensor(Dims d, std::uint32_t seed) {
  std::mt19937 rng(seed);
  std::uniform_real_distribution<float> u(-1.f, 1.f);
  Tensor t(d);
  for (auto& v : t.values()) v = Real(u(rng));
  return t;
}

// Args: channels, extent, kernel, groups (0 = depthwise), stride.
void BM_Conv2d(benchmark::State& state) {
  const int c = int(state.range(0)), hw = int(state.range(1)), k = int(state.range(2));
  const int groups = state.range(3) == 0 ? c : int(state.range(3));
  const int stride = int(state.range(4));
  const Var x(random_tensor(Dims{1, c, hw, hw}, 1));
  const Var w(random_tensor(Dims{c, c / groups, k, k}, 2));
  NoGradGuard no_grad;
  for (auto _ : state) {
    Var y = ops::conv2d(x, w, Var(), stride, groups);
    benchmark::DoNotOptimize(y.value().values().data());
  }
  const auto flops = count_conv_flops(c, c, k, hw, hw, stride, groups).flops;
  state.counters["FLOPs"] = benchmark::Counter(double(flops) * state.iterations(),
                                               benchmark::Counter::kIsRate);
}
BENCHMARK(BM_Conv2d)
    ->ArgNames({"c", "hw", "k", "groups", "stride"})
    ->Args({32, 128, 3, 1, 1})
    ->Args({32, 128, 3, 0, 1})
    ->Args({32, 128, 1, 1, 1})
    ->Args({64, 64, 3, 1, 1})
    ->Args({64, 64, 3, 1, 2})
    ->Args({128, 32, 3, 1, 1})
    ->Unit(benchmark::kMillisecond);

void BM_Conv2dBackward(benchmark::State& state) {
  const int c = int(state.range(0)), hw = int(state.range(1));
  const Tensor xv = random_tensor(Dims{2, c, hw, hw}, 3);
  const Tensor wv = random_tensor(Dims{c, c, 3, 3}, 4);
  const LabelMap labels(2, hw, hw, 0);
  for (auto _ : state) {
    Var x(xv, true), w(wv, true);
    Var loss = ops::cross_entropy(ops::conv2d(x, w, Var(), 1), labels);
    backward(loss);
    benchmark::DoNotOptimize(w.grad().values().data());
  }
}
BENCHMARK(BM_Conv2dBackward)->Args({32, 64})->Args({64, 32})->Unit(benchmark::kMillisecond);

}  // namespace
}  // namespace lpsnet
