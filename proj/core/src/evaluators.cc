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

#include "lpsnet/evaluators.h"

#include <cmath>
#include <random>

#include "lpsnet/costmodel.h"
#include "lpsnet/csv.h"
#include "lpsnet/error.h"
#include "lpsnet/network.h"

namespace lpsnet::inline LPSNET_ABI_NAMESPACE {

LookupEvaluator::LookupEvaluator(const std::string& csv_path) {
  const CsvTable t = read_csv(csv_path);
  const std::size_t ks = t.column("spec"), kp = t.column("perf_pct"), kl = t.column("lat_ms");
  for (std::size_t i = 0; i < t.rows.size(); ++i) {
    const auto& row = t.rows[i];
    const std::string ctx = csv_path + " row " + std::to_string(i + 2);
    NetworkSpec spec;
    try {
      spec = parse_spec_key(row[ks]);
    } catch (const Error& e) {
      throw ParseError(ctx + ": " + e.what());
    }
    const std::string key = spec_key(spec);
    if (table_.count(key)) throw ParseError(ctx + ": duplicate spec '" + key + "'");
    table_[key] = {parse_real(row[kp], ctx), parse_real(row[kl], ctx)};
  }
}

LookupEvaluator::LookupEvaluator(std::map<std::string, std::pair<double, double>> table)
    : table_(std::move(table)) {}

const std::pair<double, double>& LookupEvaluator::find(const NetworkSpec& spec) const {
  const std::string key = spec_key(spec);
  auto it = table_.find(key);
  if (it == table_.end()) throw Error("lookup evaluator: no entry for spec '" + key + "'");
  return it->second;
}

double LookupEvaluator::perf(const NetworkSpec& spec) { return find(spec).first; }
double LookupEvaluator::lat(const NetworkSpec& spec) { return find(spec).second; }

SurrogateEvaluator::SurrogateEvaluator(std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> ua(0.02, 0.06), ub(0.2, 0.8), uc(0.005, 0.02);
  a_ = ua(rng);
  b_ = ub(rng);
  c_ = uc(rng);
}

namespace {

std::int64_t surrogate_flops(const NetworkSpec& spec) {
  return count_flops(spec, BlockKind::kConv3x3, default_interaction(spec), kSurrogateClasses,
                     kSurrogateInputH, kSurrogateInputW)
      .total_flops;
}

}  // namespace

double SurrogateEvaluator::perf(const NetworkSpec& spec) {
  const double x = a_ * std::log1p(double(surrogate_flops(spec))) +
                   b_ * spec.max_ratio().value() + c_ * spec.total_depth();
  return 100.0 * (1.0 - std::exp(-x));
}

double SurrogateEvaluator::lat(const NetworkSpec& spec) {
  CostReport r = count_flops(spec, BlockKind::kConv3x3, default_interaction(spec),
                             kSurrogateClasses, kSurrogateInputH, kSurrogateInputW);
  DeviceProfile profile;
  profile.default_mflops_per_ms = kSurrogateMflopsPerMs;
  return estimate_latency(r, profile);
}

TrainEvaluator::TrainEvaluator(TrainEvaluatorConfig cfg)
    : cfg_(std::move(cfg)),
      data_(synth_shapes(cfg_.samples, cfg_.num_classes, cfg_.image_h, cfg_.image_w,
                         cfg_.data_seed)) {
  cfg_.train.validate();
}

double TrainEvaluator::perf(const NetworkSpec& spec) {
  NetworkInstance net = NetworkInstance::build(spec, cfg_.block_kind, default_interaction(spec),
                                               cfg_.num_classes, cfg_.train.seed);
  train(net, *data_.train, cfg_.train);
  return 100.0 * evaluate_miou(net, *data_.val).miou;
}

double TrainEvaluator::lat(const NetworkSpec& spec) {
  NetworkInstance net = NetworkInstance::build(spec, cfg_.block_kind, default_interaction(spec),
                                               cfg_.num_classes, cfg_.train.seed);
  const Tensor image(Dims{1, 3, cfg_.latency_h, cfg_.latency_w}, Real(0.5));
  return measure_latency([&] { forward(net, image); }, cfg_.warmup_runs, cfg_.measure_runs)
      .median_ms;
}

}  // namespace lpsnet
