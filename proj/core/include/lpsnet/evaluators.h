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


#pragma once

#include <cstdint>
#include <map>
#include <string>
#include <utility>

#include "lpsnet/config.h"
#include "lpsnet/blocks.h"
#include "lpsnet/evaluation.h"
#include "lpsnet/expander.h"

namespace lpsnet::inline LPSNET_ABI_NAMESPACE {

// Evaluator backed by a spec,perf_pct,lat_ms table keyed by spec_key().
class LookupEvaluator : public Evaluator {
 public:
  explicit LookupEvaluator(const std::string& csv_path);
  LookupEvaluator(std::map<std::string, std::pair<double, double>> table);

  double perf(const NetworkSpec& spec) override;
  double lat(const NetworkSpec& spec) override;
  std::string name() const override { return "lookup"; }
  std::size_t size() const { return table_.size(); }

 private:
  const std::pair<double, double>& find(const NetworkSpec& spec) const;
  std::map<std::string, std::pair<double, double>> table_;
};

// Closed-form stand-in for training: latency from the analytical cost model
// at 1024x2048 under a fixed rate, performance
// 100 * (1 - exp(-a*log(1 + flops) - b*max_ratio - c*total_depth)) with
// a, b, c drawn from the seed.
class SurrogateEvaluator : public Evaluator {
 public:
  explicit SurrogateEvaluator(std::uint64_t seed);

  double perf(const NetworkSpec& spec) override;
  double lat(const NetworkSpec& spec) override;
  std::string name() const override { return "surrogate"; }

  double a() const { return a_; }
  double b() const { return b_; }
  double c() const { return c_; }

 private:
  double a_;
  double b_;
  double c_;
};

inline constexpr double kSurrogateMflopsPerMs = 2000.0;
inline constexpr int kSurrogateInputH = 1024;
inline constexpr int kSurrogateInputW = 2048;
inline constexpr int kSurrogateClasses = 19;

// Perf(.) by training on synthetic shapes and measuring validation mIoU;
// Lat(.) by timing single-image inference on this machine.
struct TrainEvaluatorConfig {
  TrainConfig train;
  int num_classes = 4;
  int samples = 500;  // 80% train, 20% validation
  int image_h = 192;
  int image_w = 192;
  std::uint64_t data_seed = 0;
  BlockKind block_kind = BlockKind::kConv3x3;
  int latency_h = 512;
  int latency_w = 1024;
  int warmup_runs = 3;
  int measure_runs = 10;
};

class TrainEvaluator : public Evaluator {
 public:
  explicit TrainEvaluator(TrainEvaluatorConfig cfg);

  double perf(const NetworkSpec& spec) override;
  double lat(const NetworkSpec& spec) override;
  std::string name() const override { return "train"; }

 private:
  TrainEvaluatorConfig cfg_;
  DatasetSplit data_;
};

}  // namespace lpsnet
