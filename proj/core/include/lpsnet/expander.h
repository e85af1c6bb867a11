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
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "lpsnet/config.h"
#include "lpsnet/archspec.h"

namespace lpsnet::inline LPSNET_ABI_NAMESPACE {

// Perf(.) in mIoU percent and Lat(.) in milliseconds for a network spec.
class Evaluator {
 public:
  virtual ~Evaluator() = default;
  virtual double perf(const NetworkSpec& spec) = 0;
  virtual double lat(const NetworkSpec& spec) = 0;
  virtual std::string name() const = 0;
};

// Caches both functions per spec so each inner call happens at most once.
// With a backing file, every new value is appended as it is computed and
// existing rows are loaded on construction, so an interrupted run resumes.
class MemoEvaluator : public Evaluator {
 public:
  explicit MemoEvaluator(Evaluator& inner, std::string backing_csv = {});

  double perf(const NetworkSpec& spec) override;
  double lat(const NetworkSpec& spec) override;
  std::string name() const override { return inner_.name(); }

  int inner_perf_calls() const { return perf_calls_; }
  int inner_lat_calls() const { return lat_calls_; }
  std::size_t cached_specs() const { return cache_.size(); }

 private:
  struct Entry {
    std::optional<double> perf;
    std::optional<double> lat;
  };
  void append(const std::string& key, const Entry& e) const;

  Evaluator& inner_;
  std::string backing_;
  std::map<std::string, Entry> cache_;
  int perf_calls_ = 0;
  int lat_calls_ = 0;
};

inline constexpr int kMaxStepsize = 64;

struct StepsizeOptions {
  int max_k = kMaxStepsize;
  // Latency drops larger than this along k are reported as non-monotone.
  double noise_floor_ms = 0.0;
};

// max over ops of lat(apply(spec, op, 1)). Ops whose first step leaves the
// configured bounds are skipped; if every op does, throws BoundsError.
double target_latency(const NetworkSpec& spec, std::span<const ExpansionOp> ops,
                      Evaluator& evaluator);

// argmin over k >= 1 of |lat(apply(spec, op, k)) - target|, scanning k upward
// while latency stays <= target and then weighing the first overshoot; ties
// go to the smaller k. The scan also stops where apply leaves the bounds.
// Throws BoundsError when more than max_k steps would be needed or k = 1 is
// already out of bounds. Non-monotone latencies are appended to `warnings`.
int stepsize(const NetworkSpec& spec, const ExpansionOp& op, double target, Evaluator& evaluator,
             const StepsizeOptions& options = {}, std::vector<std::string>* warnings = nullptr);

struct Candidate {
  ExpansionOp op;
  int k = 0;                // 0 when the op is out of bounds
  NetworkSpec spec;
  double perf = 0.0;        // NaN when not evaluated
  double lat = 0.0;         // NaN when out of bounds
  double ratio = 0.0;       // (perf - P_prev) / (lat - L_prev); NaN when excluded
  bool excluded = false;
  std::string note;         // why a candidate was excluded
};

struct Selection {
  ExpansionOp op;
  int k = 0;
  NetworkSpec spec;
  double perf = 0.0;
  double lat = 0.0;
  double target_latency = 0.0;
  std::vector<Candidate> candidates;  // catalog order
  std::vector<std::string> warnings;
};

// One greedy step: target latency, per-op stepsize, then the candidate with
// the largest performance gain per added millisecond. Candidates that do not
// increase latency are excluded; ties keep the earlier catalog entry.
// Throws Error("no expanding candidate increases latency") when nothing remains.
Selection select(const NetworkSpec& spec, double prev_perf, double prev_lat,
                 std::span<const ExpansionOp> ops, Evaluator& evaluator,
                 const StepsizeOptions& options = {});

struct ExpansionStep {
  int index = 0;
  ExpansionOp op;
  int k = 0;
  NetworkSpec spec;
  double perf = 0.0;
  double lat = 0.0;
  double target_latency = 0.0;
  std::vector<Candidate> candidates;
  std::vector<std::string> warnings;
};

struct Trajectory {
  NetworkSpec origin;
  double origin_perf = 0.0;
  double origin_lat = 0.0;
  std::vector<ExpansionStep> steps;
  // Empty when all requested steps completed; otherwise why the run stopped.
  std::string stop_reason;
};

struct ExpandOptions {
  StepsizeOptions stepsize;
  // When set, the run directory receives evaluations.csv, trajectory.csv,
  // tradeoff.csv and candidates/step_NN.csv, and earlier evaluations found
  // there are reused.
  std::string out_dir;
  std::span<const ExpansionOp> ops = catalog();
};

// Runs `steps` greedy expansions from origin. A failing step ends the run
// with stop_reason set and the steps completed so far.
Trajectory expand(const NetworkSpec& origin, int steps, Evaluator& evaluator,
                  const ExpandOptions& options = {});

// step,dimension,op_index,k,depths,widths,ratios,perf_pct,lat_ms. Row 0 is
// the origin with dimension "origin", op_index -1 and k 0.
void write_trajectory_csv(const Trajectory& t, const std::string& path);
Trajectory read_trajectory_csv(const std::string& path);

void write_candidates_csv(const ExpansionStep& step, const std::string& path);
// lat_ms,perf_pct,step,spec for plotting the latency/accuracy trade-off.
void write_tradeoff_csv(const Trajectory& t, const std::string& path);

}  // namespace lpsnet
