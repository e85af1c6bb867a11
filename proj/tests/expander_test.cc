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

#include "lpsnet/expander.h"

#include <cmath>
#include <filesystem>
#include <fstream>
#include <functional>
#include <map>
#include <random>

#include <gtest/gtest.h>

#include "lpsnet/csv.h"
#include "lpsnet/error.h"
#include "lpsnet/evaluators.h"
#include "support/spec_gen.h"
#include "support/reference_trajectory.h"

namespace lpsnet {
namespace {

namespace fs = std::filesystem;

// Evaluator defined by two closures, counting calls.
class FnEvaluator : public Evaluator {
 public:
  using Fn = std::function<double(const NetworkSpec&)>;
  FnEvaluator(Fn perf, Fn lat) : perf_(std::move(perf)), lat_(std::move(lat)) {}
  double perf(const NetworkSpec& s) override {
    ++perf_calls;
    return perf_(s);
  }
  double lat(const NetworkSpec& s) override {
    ++lat_calls;
    return lat_(s);
  }
  std::string name() const override { return "fn"; }
  int perf_calls = 0;
  int lat_calls = 0;

 private:
  Fn perf_;
  Fn lat_;
};

// Table of (perf, lat) per spec with a fallback for everything else.
FnEvaluator table_evaluator(std::map<std::string, std::pair<double, double>> table,
                            double default_perf, double default_lat) {
  auto t = std::make_shared<decltype(table)>(std::move(table));
  return FnEvaluator(
      [t, default_perf](const NetworkSpec& s) {
        auto it = t->find(spec_key(s));
        return it == t->end() ? default_perf : it->second.first;
      },
      [t, default_lat](const NetworkSpec& s) {
        auto it = t->find(spec_key(s));
        return it == t->end() ? default_lat : it->second.second;
      });
}

TEST(StepsizeTest, ClosestToTarget) {
  const NetworkSpec base = initial_spec();
  const ExpansionOp& op = catalog()[0];  // adds a block to stages 2-5
  FnEvaluator ev([](const NetworkSpec&) { return 0.0; },
                 [&](const NetworkSpec& s) { return 1.0 + 0.3 * (s.depths[4] - base.depths[4]); });
  EXPECT_EQ(stepsize(base, op, 1.95, ev), 3);
  EXPECT_EQ(stepsize(base, op, 0.5, ev), 1);  // below k = 1
}

TEST(StepsizeTest, TieGoesToSmallerK) {
  const NetworkSpec base = initial_spec();
  FnEvaluator ev([](const NetworkSpec&) { return 0.0; },
                 [&](const NetworkSpec& s) { return 1.0 + (s.depths[4] - base.depths[4]); });
  EXPECT_EQ(stepsize(base, catalog()[0], 2.5, ev), 1);
  EXPECT_EQ(stepsize(base, catalog()[0], 3.5, ev), 2);
}

TEST(StepsizeTest, CapAndBounds) {
  const NetworkSpec base = initial_spec();
  FnEvaluator flat([](const NetworkSpec&) { return 0.0; },
                   [](const NetworkSpec& s) { return 1.0 + 1e-3 * s.total_depth(); });
  StepsizeOptions opts;
  opts.max_k = 5;
  EXPECT_THROW(stepsize(base, catalog()[0], 100.0, flat, opts), BoundsError);
  // The depth bound ends the scan before the default cap.
  EXPECT_EQ(stepsize(base, catalog()[0], 100.0, flat), kMaxDepth - 1);
  NetworkSpec deep = base;
  deep.depths = {1, kMaxDepth, kMaxDepth, kMaxDepth, kMaxDepth};
  EXPECT_THROW(stepsize(deep, catalog()[0], 100.0, flat), BoundsError);
}

TEST(StepsizeTest, WarnsOnNonMonotoneLatency) {
  const NetworkSpec base = initial_spec();
  FnEvaluator ev([](const NetworkSpec&) { return 0.0; }, [&](const NetworkSpec& s) {
    const int k = s.depths[4] - base.depths[4];
    return k == 2 ? 1.0 : 1.0 + k;
  });
  std::vector<std::string> warnings;
  EXPECT_EQ(stepsize(base, catalog()[0], 3.5, ev, {}, &warnings), 3);
  ASSERT_EQ(warnings.size(), 1u);
  warnings.clear();
  StepsizeOptions tolerant;
  tolerant.noise_floor_ms = 1.5;
  stepsize(base, catalog()[0], 3.5, ev, tolerant, &warnings);
  EXPECT_TRUE(warnings.empty());
}

TEST(TargetLatencyTest, MaxOverOps) {
  const NetworkSpec base = initial_spec();
  std::map<std::string, std::pair<double, double>> table;
  for (const auto& op : catalog()) {
    table[spec_key(apply(base, op, 1))] = {0.0, 5.0 + 0.1 * (op.index + 1)};
  }
  FnEvaluator ev = table_evaluator(table, 0.0, 5.0);
  EXPECT_DOUBLE_EQ(target_latency(base, catalog(), ev), 5.0 + 1.0);
  EXPECT_DOUBLE_EQ(target_latency(base, catalog().subspan(3, 1), ev), 5.0 + 0.4);
}

TEST(TargetLatencyTest, SkipsOutOfBoundsOps) {
  NetworkSpec s = initial_spec();
  s.depths = {1, kMaxDepth, kMaxDepth, kMaxDepth, kMaxDepth};
  FnEvaluator ev([](const NetworkSpec&) { return 0.0; },
                 [](const NetworkSpec& x) { return double(x.widths[4]); });
  EXPECT_GT(target_latency(s, catalog(), ev), 32.0);
  EXPECT_THROW(target_latency(s, catalog().subspan(0, 3), ev), BoundsError);
}

TEST(TargetLatencyTest, SurrogateAboveCurrent) {
  SurrogateEvaluator ev(3);
  EXPECT_GE(target_latency(initial_spec(), catalog(), ev), ev.lat(initial_spec()));
}

// Three ops with (dP, dL) = (2, 1), (3, 2), (1, 0.4) at k = 1; k = 2 always overshoots far.
TEST(SelectTest, LargestRatioWins) {
  const NetworkSpec base = initial_spec();
  const std::array<ExpansionOp, 3> ops = {catalog()[0], catalog()[3], catalog()[7]};
  std::map<std::string, std::pair<double, double>> table;
  table[spec_key(base)] = {10.0, 1.0};
  table[spec_key(apply(base, ops[0], 1))] = {12.0, 2.0};
  table[spec_key(apply(base, ops[1], 1))] = {13.0, 3.0};
  table[spec_key(apply(base, ops[2], 1))] = {11.0, 1.4};
  FnEvaluator ev = table_evaluator(table, 0.0, 100.0);
  const Selection sel = select(base, 10.0, 1.0, ops, ev);
  EXPECT_EQ(sel.op, ops[2]);
  EXPECT_EQ(sel.k, 1);
  EXPECT_DOUBLE_EQ(sel.target_latency, 3.0);
  ASSERT_EQ(sel.candidates.size(), 3u);
  EXPECT_DOUBLE_EQ(sel.candidates[0].ratio, 2.0);
  EXPECT_DOUBLE_EQ(sel.candidates[1].ratio, 1.5);
  EXPECT_DOUBLE_EQ(sel.candidates[2].ratio, 2.5);
}

TEST(SelectTest, SingleCandidateEvenIfWorse) {
  const NetworkSpec base = initial_spec();
  FnEvaluator ev([](const NetworkSpec& s) { return 50.0 - s.total_depth(); },
                 [](const NetworkSpec& s) { return double(s.total_depth()); });
  const Selection sel = select(base, 45.0, 5.0, catalog().subspan(0, 1), ev);
  EXPECT_EQ(sel.op, catalog()[0]);
  EXPECT_LT(sel.perf, 45.0);
}

TEST(SelectTest, TiesKeepCatalogOrder) {
  FnEvaluator ev([](const NetworkSpec& s) { return double(s.total_depth()); },
                 [](const NetworkSpec& s) { return double(s.total_depth()); });
  // Every depth op has ratio 1; width and resolution ops have ratio 0 / excluded.
  const Selection sel = select(initial_spec(), 5.0, 5.0, catalog(), ev);
  EXPECT_EQ(sel.op.index, 0);
}

TEST(SelectTest, NothingIncreasesLatency) {
  FnEvaluator ev([](const NetworkSpec&) { return 1.0; }, [](const NetworkSpec&) { return 2.0; });
  try {
    select(initial_spec(), 1.0, 2.0, catalog(), ev);
    FAIL() << "expected an error";
  } catch (const Error& e) {
    EXPECT_NE(std::string(e.what()).find("no expanding candidate increases latency"),
              std::string::npos);
  }
  EXPECT_EQ(ev.perf_calls, 0);  // excluded candidates are never trained
}

TEST(MemoTest, OneInnerCallPerSpec) {
  SurrogateEvaluator sur(1);
  FnEvaluator inner([&](const NetworkSpec& s) { return sur.perf(s); },
                    [&](const NetworkSpec& s) { return sur.lat(s); });
  MemoEvaluator memo(inner);
  const NetworkSpec a = initial_spec(), b = preset("S");
  for (int i = 0; i < 3; ++i) {
    memo.perf(a);
    memo.lat(a);
    memo.lat(b);
  }
  EXPECT_EQ(inner.perf_calls, 1);
  EXPECT_EQ(inner.lat_calls, 2);
  EXPECT_EQ(memo.inner_perf_calls(), 1);
  EXPECT_EQ(memo.inner_lat_calls(), 2);
  EXPECT_EQ(memo.cached_specs(), 2u);
}

class ExpandDirTest : public ::testing::Test {
 protected:
  void SetUp() override {
    dir_ = fs::temp_directory_path() /
           (std::string("lpsnet_expand_") +
            ::testing::UnitTest::GetInstance()->current_test_info()->name());
    fs::remove_all(dir_);
  }
  void TearDown() override { fs::remove_all(dir_); }
  fs::path dir_;
};

TEST_F(ExpandDirTest, ResumeReusesEvaluations) {
  SurrogateEvaluator sur(5);
  FnEvaluator first([&](const NetworkSpec& s) { return sur.perf(s); },
                    [&](const NetworkSpec& s) { return sur.lat(s); });
  ExpandOptions opts;
  opts.out_dir = dir_.string();
  const Trajectory a = expand(initial_spec(), 4, first, opts);
  ASSERT_EQ(a.steps.size(), 4u);
  EXPECT_GT(first.lat_calls, 0);
  EXPECT_TRUE(fs::exists(dir_ / "trajectory.csv"));
  EXPECT_TRUE(fs::exists(dir_ / "tradeoff.csv"));
  EXPECT_TRUE(fs::exists(dir_ / "candidates" / "step_04.csv"));

  FnEvaluator second([&](const NetworkSpec& s) { return sur.perf(s); },
                     [&](const NetworkSpec& s) { return sur.lat(s); });
  const Trajectory b = expand(initial_spec(), 4, second, opts);
  EXPECT_EQ(second.perf_calls, 0);
  EXPECT_EQ(second.lat_calls, 0);
  ASSERT_EQ(b.steps.size(), 4u);
  for (std::size_t i = 0; i < 4; ++i) {
    EXPECT_EQ(a.steps[i].spec, b.steps[i].spec);
    EXPECT_EQ(a.steps[i].lat, b.steps[i].lat);
  }
  // Extending the run only evaluates the new step's candidates.
  FnEvaluator third([&](const NetworkSpec& s) { return sur.perf(s); },
                    [&](const NetworkSpec& s) { return sur.lat(s); });
  expand(initial_spec(), 5, third, opts);
  EXPECT_GT(third.lat_calls, 0);
  EXPECT_LE(third.lat_calls, first.lat_calls);
}

TEST_F(ExpandDirTest, TrajectoryCsvRoundTrip) {
  SurrogateEvaluator sur(9);
  ExpandOptions opts;
  opts.out_dir = dir_.string();
  const Trajectory t = expand(initial_spec(), 3, sur, opts);
  const Trajectory r = read_trajectory_csv((dir_ / "trajectory.csv").string());
  EXPECT_EQ(r.origin, t.origin);
  EXPECT_EQ(r.origin_lat, t.origin_lat);
  ASSERT_EQ(r.steps.size(), t.steps.size());
  for (std::size_t i = 0; i < t.steps.size(); ++i) {
    EXPECT_EQ(r.steps[i].index, t.steps[i].index);
    EXPECT_EQ(r.steps[i].op, t.steps[i].op);
    EXPECT_EQ(r.steps[i].k, t.steps[i].k);
    EXPECT_EQ(r.steps[i].spec, t.steps[i].spec);
    EXPECT_EQ(r.steps[i].perf, t.steps[i].perf);
    EXPECT_EQ(r.steps[i].lat, t.steps[i].lat);
  }
  const CsvTable cands = read_csv((dir_ / "candidates" / "step_01.csv").string());
  EXPECT_EQ(cands.rows.size(), catalog().size());
}

TEST(ExpandTest, ConstantPerfSingleStep) {
  FnEvaluator ev([](const NetworkSpec&) { return 30.0; },
                 [](const NetworkSpec& s) { return 0.1 * s.total_depth() + 0.01 * s.widths[4]; });
  const Trajectory t = expand(initial_spec(), 1, ev);
  ASSERT_EQ(t.steps.size(), 1u);
  EXPECT_GT(t.steps[0].lat, t.origin_lat);
  EXPECT_TRUE(t.stop_reason.empty());
}

TEST(ExpandTest, StopsWithReason) {
  FnEvaluator ev([](const NetworkSpec&) { return 30.0; },
                 [](const NetworkSpec& s) { return s.depths[4] > 3 ? 1.0 : 1.0 + s.depths[4]; });
  const Trajectory t = expand(initial_spec(), 5, ev, {.ops = catalog().subspan(0, 1)});
  EXPECT_LT(t.steps.size(), 5u);
  EXPECT_NE(t.stop_reason.find("step " + std::to_string(t.steps.size() + 1)), std::string::npos)
      << t.stop_reason;
}

// Trajectory invariants over random surrogates.
TEST(ExpandTest, SurrogateTrajectoryInvariants) {
  for (std::uint64_t seed = 0; seed < 20; ++seed) {
    SurrogateEvaluator ev(seed);
    const Trajectory t = expand(initial_spec(), 6, ev);
    ASSERT_EQ(t.steps.size(), 6u) << t.stop_reason;
    NetworkSpec prev = t.origin;
    double prev_lat = t.origin_lat;
    for (const auto& s : t.steps) {
      EXPECT_GT(s.lat, prev_lat) << seed;
      EXPECT_EQ(s.spec, apply(prev, s.op, s.k));
      // Target latency recomputed from the evaluator.
      double lt = 0.0;
      for (const auto& op : catalog()) {
        try {
          lt = std::max(lt, ev.lat(apply(prev, op, 1)));
        } catch (const BoundsError&) {
        }
      }
      EXPECT_EQ(s.target_latency, lt);
      double chosen = NAN;
      for (const auto& c : s.candidates) {
        if (c.op == s.op) chosen = c.ratio;
      }
      for (const auto& c : s.candidates) {
        if (!c.excluded) EXPECT_GE(chosen, c.ratio) << seed << " step " << s.index;
      }
      prev = s.spec;
      prev_lat = s.lat;
    }
  }
}

TEST(SurrogateTest, PerfIncreasesUnderEveryOp) {
  std::mt19937 rng(13);
  for (int trial = 0; trial < 20; ++trial) {
    const NetworkSpec s = testutil::random_spec(rng);
    SurrogateEvaluator ev(trial);
    const double p = ev.perf(s);
    EXPECT_GT(p, 0.0);
    EXPECT_LT(p, 100.0);
    for (const auto& op : catalog()) {
      const NetworkSpec t = apply(s, op, 1);
      EXPECT_GT(ev.perf(t), p) << describe(s) << " " << op.to_string();
      EXPECT_GT(ev.lat(t), ev.lat(s)) << describe(s) << " " << op.to_string();
    }
  }
}

TEST(SurrogateTest, Deterministic) {
  SurrogateEvaluator a(4), b(4), c(5);
  EXPECT_EQ(a.a(), b.a());
  EXPECT_EQ(a.perf(preset("M")), b.perf(preset("M")));
  EXPECT_EQ(a.lat(preset("M")), b.lat(preset("M")));
  EXPECT_NE(a.perf(preset("M")), c.perf(preset("M")));
  EXPECT_GE(a.a(), 0.02);
  EXPECT_LE(a.a(), 0.06);
}

TEST(LookupTest, FixtureMatchesGenerator) {
  const CsvTable t = read_csv(std::string(LPSNET_FIXTURE_DIR) + "/trajectory_lookup.csv");
  const auto rows = testutil::trajectory_lookup_rows();
  ASSERT_EQ(t.rows.size(), rows.size());
  for (std::size_t i = 0; i < rows.size(); ++i) {
    EXPECT_EQ(t.rows[i][0], std::get<0>(rows[i]));
    EXPECT_EQ(parse_real(t.rows[i][1], "perf"), std::get<1>(rows[i]));
    EXPECT_EQ(parse_real(t.rows[i][2], "lat"), std::get<2>(rows[i]));
  }
  LookupEvaluator ev(std::string(LPSNET_FIXTURE_DIR) + "/trajectory_lookup.csv");
  EXPECT_EQ(ev.perf(testutil::reference_spec(7)), 66.1);
  EXPECT_EQ(ev.lat(testutil::reference_spec(10)), 9.52);
  EXPECT_THROW(ev.lat(apply(initial_spec(), catalog()[1], 9)), Error);
}

TEST(LookupTest, RejectsDuplicates) {
  const auto path = fs::temp_directory_path() / "lpsnet_dup_lookup.csv";
  {
    std::ofstream out(path);
    const std::string key = spec_key(initial_spec());
    out << "spec,perf_pct,lat_ms\n" << key << ",1,2\n" << key << ",1,2\n";
  }
  EXPECT_THROW(LookupEvaluator(path.string()), Error);
  fs::remove(path);
}

}  // namespace
}  // namespace lpsnet
