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
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <limits>

#include "lpsnet/csv.h"
#include "lpsnet/error.h"

namespace lpsnet::inline LPSNET_ABI_NAMESPACE {
namespace {

constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();

std::string op_label(const ExpansionOp& op) {
  return "op " + std::to_string(op.index) + " (" + op.to_string() + ")";
}

std::string real_or_empty(const std::optional<double>& v) {
  return v ? format_real(*v) : std::string();
}

}  // namespace

MemoEvaluator::MemoEvaluator(Evaluator& inner, std::string backing_csv)
    : inner_(inner), backing_(std::move(backing_csv)) {
  if (backing_.empty() || !std::filesystem::exists(backing_)) return;
  const CsvTable t = read_csv(backing_);
  const std::size_t ks = t.column("spec"), kp = t.column("perf_pct"), kl = t.column("lat_ms");
  for (const auto& row : t.rows) {
    const std::string key = spec_key(parse_spec_key(row[ks]));
    Entry& e = cache_[key];
    if (!row[kp].empty()) e.perf = parse_real(row[kp], backing_);
    if (!row[kl].empty()) e.lat = parse_real(row[kl], backing_);
  }
}

void MemoEvaluator::append(const std::string& key, const Entry& e) const {
  if (backing_.empty()) return;
  const bool fresh = !std::filesystem::exists(backing_);
  std::ofstream out(backing_, std::ios::app);
  if (!out) throw Error("cannot append to '" + backing_ + "'");
  if (fresh) out << "spec,perf_pct,lat_ms\n";
  out << key << ',' << real_or_empty(e.perf) << ',' << real_or_empty(e.lat) << '\n';
}

double MemoEvaluator::perf(const NetworkSpec& spec) {
  const std::string key = spec_key(spec);
  Entry& e = cache_[key];
  if (!e.perf) {
    ++perf_calls_;
    e.perf = inner_.perf(spec);
    append(key, {e.perf, std::nullopt});
  }
  return *e.perf;
}

double MemoEvaluator::lat(const NetworkSpec& spec) {
  const std::string key = spec_key(spec);
  Entry& e = cache_[key];
  if (!e.lat) {
    ++lat_calls_;
    e.lat = inner_.lat(spec);
    append(key, {std::nullopt, e.lat});
  }
  return *e.lat;
}

double target_latency(const NetworkSpec& spec, std::span<const ExpansionOp> ops,
                      Evaluator& evaluator) {
  double best = -std::numeric_limits<double>::infinity();
  bool any = false;
  for (const auto& op : ops) {
    NetworkSpec next;
    try {
      next = apply(spec, op, 1);
    } catch (const BoundsError&) {
      continue;
    }
    double l;
    try {
      l = evaluator.lat(next);
    } catch (const std::exception& e) {
      throw Error("target_latency: " + op_label(op) + ": " + e.what());
    }
    best = std::max(best, l);
    any = true;
  }
  if (!any) throw BoundsError("target_latency: every expansion op leaves the configured bounds");
  return best;
}

int stepsize(const NetworkSpec& spec, const ExpansionOp& op, double target, Evaluator& evaluator,
             const StepsizeOptions& options, std::vector<std::string>* warnings) {
  int best_k = 0;
  double best_gap = std::numeric_limits<double>::infinity();
  double prev = -std::numeric_limits<double>::infinity();
  for (int k = 1;; ++k) {
    if (k > options.max_k) {
      throw BoundsError("stepsize: " + op_label(op) + " still below the target latency at k = " +
                        std::to_string(options.max_k));
    }
    NetworkSpec next;
    try {
      next = apply(spec, op, k);
    } catch (const BoundsError&) {
      if (k == 1) throw;
      break;
    }
    double l;
    try {
      l = evaluator.lat(next);
    } catch (const std::exception& e) {
      throw Error("stepsize: " + op_label(op) + " k=" + std::to_string(k) + ": " + e.what());
    }
    if (l < prev - options.noise_floor_ms && warnings) {
      warnings->push_back("non-monotone latency for " + op_label(op) + ": " + format_real(prev) +
                          " ms at k=" + std::to_string(k - 1) + ", " + format_real(l) +
                          " ms at k=" + std::to_string(k));
    }
    const double gap = std::abs(l - target);
    if (gap < best_gap) {
      best_gap = gap;
      best_k = k;
    }
    if (l > target) break;
    prev = l;
  }
  return best_k;
}

Selection select(const NetworkSpec& spec, double prev_perf, double prev_lat,
                 std::span<const ExpansionOp> ops, Evaluator& evaluator,
                 const StepsizeOptions& options) {
  Selection sel;
  sel.target_latency = target_latency(spec, ops, evaluator);
  int best = -1;
  for (const auto& op : ops) {
    Candidate c;
    c.op = op;
    c.perf = kNaN;
    c.lat = kNaN;
    c.ratio = kNaN;
    try {
      c.k = stepsize(spec, op, sel.target_latency, evaluator, options, &sel.warnings);
    } catch (const BoundsError& e) {
      c.excluded = true;
      c.note = e.what();
      c.spec = spec;
      sel.candidates.push_back(std::move(c));
      continue;
    }
    c.spec = apply(spec, op, c.k);
    c.lat = evaluator.lat(c.spec);
    if (!(c.lat > prev_lat)) {
      c.excluded = true;
      c.note = "latency does not increase";
    } else {
      try {
        c.perf = evaluator.perf(c.spec);
      } catch (const std::exception& e) {
        throw Error("select: " + op_label(op) + ": " + e.what());
      }
      c.ratio = (c.perf - prev_perf) / (c.lat - prev_lat);
      if (best < 0 || c.ratio > sel.candidates[best].ratio) best = int(sel.candidates.size());
    }
    sel.candidates.push_back(std::move(c));
  }
  if (best < 0) throw Error("no expanding candidate increases latency");
  const Candidate& w = sel.candidates[best];
  sel.op = w.op;
  sel.k = w.k;
  sel.spec = w.spec;
  sel.perf = w.perf;
  sel.lat = w.lat;
  return sel;
}

namespace {

std::string step_file(int index) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "step_%02d.csv", index);
  return buf;
}

}  // namespace

Trajectory expand(const NetworkSpec& origin, int steps, Evaluator& evaluator,
                  const ExpandOptions& options) {
  if (steps < 1) throw InvalidArgument("expand: steps must be >= 1");
  if (auto v = validate(origin); !v.empty()) {
    throw InvalidArgument("expand: invalid origin: " + v.front());
  }
  namespace fs = std::filesystem;
  std::string memo_path;
  if (!options.out_dir.empty()) {
    fs::create_directories(fs::path(options.out_dir) / "candidates");
    memo_path = (fs::path(options.out_dir) / "evaluations.csv").string();
  }
  MemoEvaluator memo(evaluator, memo_path);

  Trajectory t;
  t.origin = origin.normalized();
  t.origin_perf = memo.perf(t.origin);
  t.origin_lat = memo.lat(t.origin);

  auto persist = [&] {
    if (options.out_dir.empty()) return;
    write_trajectory_csv(t, (fs::path(options.out_dir) / "trajectory.csv").string());
    write_tradeoff_csv(t, (fs::path(options.out_dir) / "tradeoff.csv").string());
  };

  NetworkSpec cur = t.origin;
  double perf = t.origin_perf, lat = t.origin_lat;
  for (int i = 1; i <= steps; ++i) {
    Selection sel;
    try {
      sel = select(cur, perf, lat, options.ops, memo, options.stepsize);
    } catch (const std::exception& e) {
      t.stop_reason = "step " + std::to_string(i) + ": " + e.what();
      break;
    }
    ExpansionStep step;
    step.index = i;
    step.op = sel.op;
    step.k = sel.k;
    step.spec = sel.spec;
    step.perf = sel.perf;
    step.lat = sel.lat;
    step.target_latency = sel.target_latency;
    step.candidates = std::move(sel.candidates);
    step.warnings = std::move(sel.warnings);
    if (!options.out_dir.empty()) {
      write_candidates_csv(step,
                           (fs::path(options.out_dir) / "candidates" / step_file(i)).string());
    }
    cur = step.spec;
    perf = step.perf;
    lat = step.lat;
    t.steps.push_back(std::move(step));
    persist();
  }
  persist();
  return t;
}

void write_trajectory_csv(const Trajectory& t, const std::string& path) {
  std::ofstream out(path);
  if (!out) throw Error("cannot write '" + path + "'");
  out << "step,dimension,op_index,k,depths,widths,ratios,perf_pct,lat_ms\n";
  auto row = [&](int step, const std::string& dim, int op, int k, const NetworkSpec& s,
                 double p, double l) {
    out << step << ',' << dim << ',' << op << ',' << k << ',' << join_stage_vector(s.depths)
        << ',' << join_stage_vector(s.widths) << ',' << join_ratio_vector(s.ratios) << ','
        << format_real(p) << ',' << format_real(l) << '\n';
  };
  row(0, "origin", -1, 0, t.origin, t.origin_perf, t.origin_lat);
  for (const auto& s : t.steps) {
    row(s.index, std::string(to_string(s.op.dimension)), s.op.index, s.k, s.spec, s.perf, s.lat);
  }
}

Trajectory read_trajectory_csv(const std::string& path) {
  const CsvTable tab = read_csv(path);
  const std::size_t c_step = tab.column("step"), c_dim = tab.column("dimension"),
                    c_op = tab.column("op_index"), c_k = tab.column("k"),
                    c_d = tab.column("depths"), c_w = tab.column("widths"),
                    c_r = tab.column("ratios"), c_p = tab.column("perf_pct"),
                    c_l = tab.column("lat_ms");
  Trajectory t;
  bool have_origin = false;
  for (const auto& row : tab.rows) {
    const std::string ctx = path + " step " + row[c_step];
    const NetworkSpec spec = parse_spec_key(row[c_d] + "|" + row[c_w] + "|" + row[c_r]);
    const double p = parse_real(row[c_p], ctx), l = parse_real(row[c_l], ctx);
    const int step = int(parse_integer(row[c_step], ctx));
    if (step == 0) {
      t.origin = spec;
      t.origin_perf = p;
      t.origin_lat = l;
      have_origin = true;
      continue;
    }
    if (step != int(t.steps.size()) + 1) {
      throw ParseError(ctx + ": steps must be contiguous from 1");
    }
    ExpansionStep s;
    s.index = step;
    const long long op = parse_integer(row[c_op], ctx);
    if (op < 0 || op >= long(catalog().size())) throw ParseError(ctx + ": bad op_index");
    s.op = catalog()[op];
    if (s.op.dimension != parse_dimension(row[c_dim])) {
      throw ParseError(ctx + ": dimension does not match op_index");
    }
    s.k = int(parse_integer(row[c_k], ctx));
    s.spec = spec;
    s.perf = p;
    s.lat = l;
    t.steps.push_back(std::move(s));
  }
  if (!have_origin) throw ParseError(path + ": missing origin row (step 0)");
  return t;
}

void write_candidates_csv(const ExpansionStep& step, const std::string& path) {
  std::ofstream out(path);
  if (!out) throw Error("cannot write '" + path + "'");
  out << "op_index,dimension,k,spec,perf_pct,lat_ms,ratio,target_latency_ms,status,note\n";
  for (const auto& c : step.candidates) {
    const bool chosen = !c.excluded && c.op == step.op && c.k == step.k;
    std::string note = c.note;
    for (auto& ch : note) {
      if (ch == ',' || ch == '\n') ch = ';';
    }
    out << c.op.index << ',' << to_string(c.op.dimension) << ',' << c.k << ','
        << spec_key(c.spec) << ',' << format_real(c.perf) << ',' << format_real(c.lat) << ','
        << format_real(c.ratio) << ',' << format_real(step.target_latency) << ','
        << (chosen ? "selected" : c.excluded ? "excluded" : "candidate") << ',' << note << '\n';
  }
}

void write_tradeoff_csv(const Trajectory& t, const std::string& path) {
  std::ofstream out(path);
  if (!out) throw Error("cannot write '" + path + "'");
  out << "lat_ms,perf_pct,step,spec\n";
  out << format_real(t.origin_lat) << ',' << format_real(t.origin_perf) << ",0,"
      << spec_key(t.origin) << '\n';
  for (const auto& s : t.steps) {
    out << format_real(s.lat) << ',' << format_real(s.perf) << ',' << s.index << ','
        << spec_key(s.spec) << '\n';
  }
}

}  // namespace lpsnet
