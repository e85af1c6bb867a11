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

// lpsnet: inspect specs, count FLOPs, benchmark, train, evaluate and run
// latency-constrained expansions from the command line.

#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <memory>
#include <sstream>
#include <string>
#include <vector>

#include <CLI/CLI.hpp>
#include <nlohmann/json.hpp>

#include "cli_support.h"
#include "lpsnet/archspec.h"
#include "lpsnet/autograd.h"
#include "lpsnet/blocks.h"
#include "lpsnet/checkpoint.h"
#include "lpsnet/costmodel.h"
#include "lpsnet/dataset.h"
#include "lpsnet/error.h"
#include "lpsnet/evaluation.h"
#include "lpsnet/evaluators.h"
#include "lpsnet/expander.h"
#include "lpsnet/network.h"

namespace lpsnet::cli {
namespace {

namespace fs = std::filesystem;
using nlohmann::json;

std::string fixed(double v, int digits) {
  std::ostringstream o;
  o.setf(std::ios::fixed);
  o.precision(digits);
  o << v;
  return o.str();
}

InteractionKind interaction_for(const NetworkSpec& spec, const std::string& name) {
  return name.empty() ? default_interaction(spec) : parse_interaction_kind(name);
}

// Reads a JSON object whose keys mirror TrainConfig field names. Unknown keys
// are errors so that typos do not silently fall back to defaults.
TrainConfig load_train_config(const std::string& path) {
  TrainConfig cfg;
  if (path.empty()) return cfg;
  std::ifstream in(path);
  if (!in) throw Error("cannot read train config '" + path + "'");
  json doc;
  try {
    doc = json::parse(in);
  } catch (const json::parse_error& e) {
    throw ParseError(path + ": " + e.what());
  }
  if (!doc.is_object()) throw ParseError(path + ": top level must be an object");
  for (const auto& [key, v] : doc.items()) {
    try {
      if (key == "base_lr") cfg.base_lr = v.get<double>();
      else if (key == "momentum") cfg.momentum = v.get<double>();
      else if (key == "weight_decay") cfg.weight_decay = v.get<double>();
      else if (key == "power") cfg.power = v.get<double>();
      else if (key == "total_iters") cfg.total_iters = v.get<int>();
      else if (key == "batch_size") cfg.batch_size = v.get<int>();
      else if (key == "crop_h") cfg.crop_h = v.get<int>();
      else if (key == "crop_w") cfg.crop_w = v.get<int>();
      else if (key == "scale_min") cfg.scale_min = v.get<double>();
      else if (key == "scale_max") cfg.scale_max = v.get<double>();
      else if (key == "hflip") cfg.hflip = v.get<bool>();
      else if (key == "color_jitter") cfg.color_jitter = v.get<bool>();
      else if (key == "jitter_strength") cfg.jitter_strength = v.get<double>();
      else if (key == "seed") cfg.seed = v.get<std::uint64_t>();
      else if (key == "imagenet_pretrain") cfg.imagenet_pretrain = v.get<bool>();
      else if (key == "hard_pixel_mining") cfg.hard_pixel_mining = v.get<bool>();
      else throw ParseError(path + ": unknown field '" + key + "'");
    } catch (const json::type_error&) {
      throw ParseError(path + ": field '" + key + "' has the wrong type");
    }
  }
  cfg.validate();
  return cfg;
}

// Dataset flags shared by train and eval.
struct DataOptions {
  std::string source = "synth";
  int samples = 500;
  std::string image = "192x192";
  int classes = 4;
  std::uint64_t seed = 7;

  void add_to(CLI::App* cmd) {
    cmd->add_option("--data", source, "'synth' or a dataset root with images/ and labels/")
        ->capture_default_str();
    cmd->add_option("--samples", samples, "synthetic sample count (80/20 split)")
        ->capture_default_str()
        ->check(CLI::PositiveNumber);
    cmd->add_option("--image", image, "synthetic image size HxW")->capture_default_str();
    cmd->add_option("--data-seed", seed, "synthetic data seed")->capture_default_str();
  }

  std::shared_ptr<const Dataset> load(const std::string& split, int num_classes) const {
    if (source == "synth") {
      const Resolution r = parse_resolution(image);
      DatasetSplit d = synth_shapes(samples, num_classes, r.h, r.w, seed_or_env(seed));
      return split == "train" ? d.train : d.val;
    }
    return load_directory_dataset(source, split);
  }
};

int cmd_spec(const std::string& file, const std::string& preset_name, const std::string& format) {
  const NetworkSpec s = resolve_spec(file.empty() ? preset_name : file);
  if (format == "raw") {
    std::cout << serialize(s);
    return 0;
  }
  std::cout << "depths " << join_stage_vector(s.depths) << "\n"
            << "widths " << join_stage_vector(s.widths) << "\n"
            << "ratios " << join_ratio_vector(s.ratios) << "\n"
            << "paths  " << s.active_paths() << "\n"
            << "valid  yes\n";
  return 0;
}

int cmd_flops(const std::string& source, const std::string& res, int classes,
              const std::string& block, const std::string& inter, const std::string& csv) {
  const Resolution r = parse_resolution(res);
  const NetworkSpec s = resolve_spec(source);
  const CostReport rep =
      count_flops(s, parse_block_kind(block), interaction_for(s, inter), classes, r.h, r.w);
  std::cout << "resolution " << r.h << "x" << r.w << "\n"
            << "flops      " << rep.total_flops << "\n"
            << "gflops     " << fixed(rep.total_flops / 1e9, 3) << "\n"
            << "params     " << rep.total_params << "\n"
            << "layers     " << rep.per_layer.size() << "\n";
  if (!csv.empty()) write_cost_csv(rep, csv);
  return 0;
}

int cmd_bench(const std::string& source, const std::string& res, int classes,
              const std::string& block, const std::string& inter, int warmup, int runs,
              const std::string& csv) {
  const std::string device = device_from_env();
  const Resolution r = parse_resolution(res);
  const NetworkSpec s = resolve_spec(source);
  const BlockKind bk = parse_block_kind(block);
  const InteractionKind ik = interaction_for(s, inter);
  const auto net = NetworkInstance::build(s, bk, ik, classes, seed_or_env(0));
  const std::int64_t flops = count_flops(s, bk, ik, classes, r.h, r.w).total_flops;
  const Tensor image(Dims{1, 3, r.h, r.w}, 0.5f);

  DeviceLock lock(device);
  const LatencyMeasurement m = measure_latency([&] { forward(net, image); }, warmup, runs, device);
  std::cout << "device      " << device << "\n"
            << "resolution  " << r.h << "x" << r.w << "\n"
            << "median_ms   " << fixed(m.median_ms, 3) << "\n"
            << "gflops      " << fixed(flops / 1e9, 3) << "\n"
            << "mflops/ms   " << fixed(flops_efficiency(flops, m.median_ms), 1) << "\n";
  if (!csv.empty()) {
    std::ofstream out(csv);
    if (!out) throw Error("cannot write '" + csv + "'");
    out << "run,ms\n";
    for (std::size_t i = 0; i < m.samples_ms.size(); ++i) {
      out << i << "," << fixed(m.samples_ms[i], 4) << "\n";
    }
  }
  return 0;
}

int cmd_train(const std::string& source, const std::string& config, const DataOptions& data,
              const std::string& block, const std::string& inter, std::uint64_t net_seed,
              int iters, const std::string& out_dir) {
  TrainConfig cfg = load_train_config(config);
  if (iters > 0) cfg.total_iters = iters;
  if (auto s = seed_from_env()) cfg.seed = *s;
  cfg.validate();
  const NetworkSpec s = resolve_spec(source);
  const BlockKind bk = parse_block_kind(block);
  const InteractionKind ik = interaction_for(s, inter);
  auto net = NetworkInstance::build(s, bk, ik, data.classes, seed_or_env(net_seed));
  const auto train_set = data.load("train", data.classes);
  fs::create_directories(out_dir);

  const TrainLog log = train(net, *train_set, cfg, [&](int it, double lr, double loss) {
    if ((it + 1) % 50 == 0 || it + 1 == cfg.total_iters) {
      std::cerr << "iter " << it + 1 << "/" << cfg.total_iters << " lr " << fixed(lr, 6)
                << " loss " << fixed(loss, 4) << "\n";
    }
  });
  save_checkpoint(net, (fs::path(out_dir) / "model.ckpt").string());
  save_spec_file(s, (fs::path(out_dir) / "spec.json").string());
  write_loss_csv(log, (fs::path(out_dir) / "loss.csv").string());
  std::cout << "iterations " << log.loss.size() << "\n";
  if (!log.loss.empty()) std::cout << "final_loss " << fixed(log.loss.back(), 4) << "\n";
  std::cout << "checkpoint " << (fs::path(out_dir) / "model.ckpt").string() << "\n";
  return 0;
}

int cmd_eval(const std::string& checkpoint, const DataOptions& data, const std::string& split,
             const std::string& csv) {
  const NetworkInstance net = load_checkpoint(checkpoint);
  const auto set = data.load(split, net.num_classes());
  const MiouResult r = evaluate_miou(net, *set);
  std::cout << "samples " << set->size() << "\n"
            << "miou    " << fixed(r.miou, 4) << "\n";
  for (std::size_t c = 0; c < r.per_class.size(); ++c) {
    std::cout << "class " << c << " iou "
              << (std::isnan(r.per_class[c]) ? std::string("nan") : fixed(r.per_class[c], 4))
              << "\n";
  }
  if (!csv.empty()) {
    std::ofstream out(csv);
    if (!out) throw Error("cannot write '" + csv + "'");
    out << "class,iou\n";
    for (std::size_t c = 0; c < r.per_class.size(); ++c) {
      out << c << "," << (std::isnan(r.per_class[c]) ? std::string("nan") : fixed(r.per_class[c], 6))
          << "\n";
    }
  }
  return 0;
}

std::unique_ptr<Evaluator> make_evaluator(const std::string& spec, std::uint64_t seed,
                                          const std::string& train_config) {
  if (spec == "surrogate") return std::make_unique<SurrogateEvaluator>(seed_or_env(seed));
  if (spec.starts_with("lookup:")) return std::make_unique<LookupEvaluator>(spec.substr(7));
  if (spec == "train") {
    TrainEvaluatorConfig cfg;
    cfg.train = load_train_config(train_config);
    if (auto s = seed_from_env()) {
      cfg.train.seed = *s;
      cfg.data_seed = *s;
    }
    return std::make_unique<TrainEvaluator>(cfg);
  }
  throw InvalidArgument("unknown evaluator '" + spec + "' (surrogate, train or lookup:FILE)");
}

int cmd_expand(const std::string& origin, int steps, const std::string& evaluator,
               std::uint64_t seed, const std::string& train_config, const std::string& out_dir,
               int max_k) {
  const NetworkSpec start = resolve_spec(origin);
  auto ev = make_evaluator(evaluator, seed, train_config);
  std::unique_ptr<DeviceLock> lock;
  if (evaluator == "train") lock = std::make_unique<DeviceLock>(device_from_env());
  fs::create_directories(out_dir);
  ExpandOptions opt;
  opt.out_dir = out_dir;
  opt.stepsize.max_k = max_k;
  const Trajectory t = expand(start, steps, *ev, opt);

  std::cout << "step,dimension,op,k,lat_ms,perf_pct,depths,widths,ratios\n";
  std::cout << "0,-,-,0," << fixed(t.origin_lat, 3) << "," << fixed(t.origin_perf, 3) << ","
            << join_stage_vector(t.origin.depths) << "," << join_stage_vector(t.origin.widths)
            << "," << join_ratio_vector(t.origin.ratios) << "\n";
  for (const auto& s : t.steps) {
    std::cout << s.index << "," << to_string(s.op.dimension) << "," << s.op.index << "," << s.k
              << "," << fixed(s.lat, 3) << "," << fixed(s.perf, 3) << ","
              << join_stage_vector(s.spec.depths) << "," << join_stage_vector(s.spec.widths)
              << "," << join_ratio_vector(s.spec.ratios) << "\n";
    for (const auto& w : s.warnings) std::cerr << "warning: step " << s.index << ": " << w << "\n";
  }
  if (!t.stop_reason.empty()) throw Error(t.stop_reason);
  return 0;
}

int cmd_export(const std::string& run_dir, const std::string& trajectory, const std::string& out) {
  const std::string in =
      trajectory.empty() ? (fs::path(run_dir) / "trajectory.csv").string() : trajectory;
  const Trajectory t = read_trajectory_csv(in);
  write_tradeoff_csv(t, out);
  std::cout << "points " << t.steps.size() + 1 << "\n";
  return 0;
}

int cmd_presets() {
  std::cout << "name,depths,widths,ratios,paths,gflops_1024x2048,params\n";
  for (const char* name : {"S", "M", "L"}) {
    const NetworkSpec s = preset(name);
    const CostReport r =
        count_flops(s, BlockKind::kConv3x3, default_interaction(s), 19, 1024, 2048);
    std::cout << name << "," << join_stage_vector(s.depths) << "," << join_stage_vector(s.widths)
              << "," << join_ratio_vector(s.ratios) << "," << s.active_paths() << ","
              << fixed(r.total_flops / 1e9, 2) << "," << r.total_params << "\n";
  }
  return 0;
}

int cmd_block_study(const std::string& shape, const std::string& blocks, int stride, int warmup,
                    int runs, const std::string& csv) {
  const std::string device = device_from_env();
  const BlockShape sh = parse_block_shape(shape);
  std::vector<BlockKind> kinds;
  if (blocks == "all") {
    kinds.assign(kAllBlockKinds.begin(), kAllBlockKinds.end());
  } else {
    std::stringstream ss(blocks);
    for (std::string name; std::getline(ss, name, ',');) kinds.push_back(parse_block_kind(name));
  }
  std::ofstream file;
  if (!csv.empty()) {
    file.open(csv);
    if (!file) throw Error("cannot write '" + csv + "'");
  }

  DeviceLock lock(device);
  const std::string header = "block,flops,params,median_ms,mflops_per_ms,error\n";
  std::cout << header;
  if (file) file << header;
  for (BlockKind kind : kinds) {
    const CostReport cost = count_block_flops(kind, sh.c, sh.c, sh.h, sh.w, stride);
    std::string row = std::string(to_string(kind)) + "," + std::to_string(cost.total_flops) + "," +
                      std::to_string(cost.total_params) + ",";
    try {
      ParameterSet ps;
      ParamBuilder b(seed_or_env(0), ps);
      auto block = make_block(kind, b, "block", sh.c, sh.c, stride);
      const Var x(Tensor(Dims{1, sh.c, sh.h, sh.w}, 0.5f));
      NoGradGuard no_grad;
      const auto m = measure_latency([&] { block->forward(x, false); }, warmup, runs, device);
      row += fixed(m.median_ms, 4) + "," +
             fixed(flops_efficiency(cost.total_flops, m.median_ms), 1) + ",";
    } catch (const std::exception& e) {
      std::string msg = e.what();
      for (char& c : msg) {
        if (c == ',' || c == '\n') c = ';';
      }
      row += ",," + msg;
    }
    std::cout << row << "\n";
    if (file) file << row << "\n";
  }
  return 0;
}

int run(int argc, char** argv) {
  CLI::App app{"lpsnet: latency-constrained multi-path segmentation networks", "lpsnet"};
  app.require_subcommand(1);
  app.set_version_flag("--version", "lpsnet 0.1.0");

  std::string spec_file, spec_preset, spec_format = "summary";
  auto* spec = app.add_subcommand("spec", "print or validate a network spec");
  auto* spec_src = spec->add_option_group("source");
  spec_src->add_option("--file", spec_file, "spec file");
  spec_src->add_option("--preset", spec_preset, "S, M, L or n0");
  spec_src->require_option(1);
  spec->add_option("--format", spec_format, "summary or raw")
      ->check(CLI::IsMember({"summary", "raw"}))
      ->capture_default_str();

  std::string src = "S", res = "1024x2048", block = "Conv3x3", inter, csv;
  int classes = 19;
  auto* flops = app.add_subcommand("flops", "count FLOPs and parameters");
  flops->add_option("--spec", src, "preset (S, M, L, n0) or spec file")->capture_default_str();
  flops->add_option("--res", res, "input HxW")->capture_default_str();
  flops->add_option("--classes", classes, "output classes")->capture_default_str();
  flops->add_option("--block", block, "block kind")->capture_default_str();
  flops->add_option("--interaction", inter, "interaction kind (default per path count)");
  flops->add_option("--csv", csv, "per-layer CSV output");

  int warmup = 10, runs = 50;
  std::string bench_res = "512x1024";
  auto* bench = app.add_subcommand("bench", "measure median forward latency");
  bench->add_option("--spec", src, "preset (S, M, L, n0) or spec file")->capture_default_str();
  bench->add_option("--res", bench_res, "input HxW")->capture_default_str();
  bench->add_option("--classes", classes, "output classes")->capture_default_str();
  bench->add_option("--block", block, "block kind")->capture_default_str();
  bench->add_option("--interaction", inter, "interaction kind (default per path count)");
  bench->add_option("--warmup", warmup, "untimed runs")->capture_default_str()->check(CLI::NonNegativeNumber);
  bench->add_option("--runs", runs, "timed runs")->capture_default_str()->check(CLI::PositiveNumber);
  bench->add_option("--csv", csv, "per-run latency CSV output");

  DataOptions data;
  std::string config, out_dir = "run";
  std::uint64_t net_seed = 1;
  int iters = 0;
  auto* tr = app.add_subcommand("train", "train a network and save a checkpoint");
  tr->add_option("--spec", src, "preset (S, M, L, n0) or spec file")->capture_default_str();
  tr->add_option("--config", config, "JSON file with TrainConfig fields");
  tr->add_option("--iters", iters, "override total_iters")->check(CLI::NonNegativeNumber);
  tr->add_option("--classes", data.classes, "output classes")->capture_default_str();
  tr->add_option("--block", block, "block kind")->capture_default_str();
  tr->add_option("--interaction", inter, "interaction kind (default per path count)");
  tr->add_option("--seed", net_seed, "weight initialization seed")->capture_default_str();
  tr->add_option("--out", out_dir, "output directory")->capture_default_str();
  data.add_to(tr);

  std::string checkpoint, split = "val";
  auto* ev = app.add_subcommand("eval", "evaluate mIoU of a checkpoint");
  ev->add_option("--checkpoint", checkpoint, "checkpoint file")->required();
  ev->add_option("--split", split, "dataset split")->capture_default_str();
  ev->add_option("--csv", csv, "per-class IoU CSV output");
  data.add_to(ev);

  std::string origin = "n0", evaluator = "surrogate", exp_out = "expansion";
  int steps = 14, max_k = kMaxStepsize;
  std::uint64_t ev_seed = 0;
  auto* ex = app.add_subcommand("expand", "run greedy latency-constrained expansion");
  ex->add_option("--origin", origin, "n0, a preset or a spec file")->capture_default_str();
  ex->add_option("--steps", steps, "expansion steps")->capture_default_str()->check(CLI::NonNegativeNumber);
  ex->add_option("--evaluator", evaluator, "surrogate, train or lookup:FILE")->capture_default_str();
  ex->add_option("--seed", ev_seed, "surrogate seed")->capture_default_str();
  ex->add_option("--train-config", config, "TrainConfig JSON for the train evaluator");
  ex->add_option("--max-k", max_k, "largest stepsize")->capture_default_str()->check(CLI::PositiveNumber);
  ex->add_option("--out", exp_out, "run directory (resumable)")->capture_default_str();

  std::string run_dir, traj_file, export_out = "tradeoff.csv";
  auto* exp = app.add_subcommand("export-trajectory", "write latency/performance curve data");
  auto* exp_src = exp->add_option_group("source");
  exp_src->add_option("--run", run_dir, "expansion run directory");
  exp_src->add_option("--trajectory", traj_file, "trajectory CSV");
  exp_src->require_option(1);
  exp->add_option("--out", export_out, "output CSV")->capture_default_str();

  auto* pre = app.add_subcommand("presets", "list the S, M and L presets");

  std::string shape = "32x128x128", blocks = "all";
  int stride = 1;
  auto* bs = app.add_subcommand("block-study", "FLOPs-efficiency of each block kind");
  bs->add_option("--shape", shape, "CxHxW")->capture_default_str();
  bs->add_option("--blocks", blocks, "all or a comma-separated list")->capture_default_str();
  bs->add_option("--stride", stride, "block stride")->capture_default_str()->check(CLI::Range(1, 2));
  bs->add_option("--warmup", warmup, "untimed runs")->capture_default_str()->check(CLI::NonNegativeNumber);
  bs->add_option("--runs", runs, "timed runs")->capture_default_str()->check(CLI::PositiveNumber);
  bs->add_option("--csv", csv, "CSV output");

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForVersion& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    throw InvalidArgument(e.what());
  }

  device_from_env();
  seed_from_env();
  if (spec->parsed()) return cmd_spec(spec_file, spec_preset, spec_format);
  if (flops->parsed()) return cmd_flops(src, res, classes, block, inter, csv);
  if (bench->parsed()) return cmd_bench(src, bench_res, classes, block, inter, warmup, runs, csv);
  if (tr->parsed()) return cmd_train(src, config, data, block, inter, net_seed, iters, out_dir);
  if (ev->parsed()) return cmd_eval(checkpoint, data, split, csv);
  if (ex->parsed()) return cmd_expand(origin, steps, evaluator, ev_seed, config, exp_out, max_k);
  if (exp->parsed()) return cmd_export(run_dir, traj_file, export_out);
  if (pre->parsed()) return cmd_presets();
  if (bs->parsed()) return cmd_block_study(shape, blocks, stride, warmup, runs, csv);
  return 2;
}

}  // namespace
}  // namespace lpsnet::cli

int main(int argc, char** argv) {
  try {
    return lpsnet::cli::run(argc, argv);
  } catch (const std::exception& e) {
    std::string msg = e.what();
    for (char& c : msg) {
      if (c == '\n') c = ' ';
    }
    std::cerr << "error: " << msg << "\n";
    return 1;
  }
}
