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

#include "lpsnet/costmodel.h"

#include <algorithm>
#include <chrono>
#include <fstream>
#include <ostream>
#include <random>
#include <set>

#include <nlohmann/json.hpp>

#include "lpsnet/autograd.h"
#include "lpsnet/error.h"
#include "lpsnet/network.h"
#include "lpsnet/ops.h"

namespace lpsnet::inline LPSNET_ABI_NAMESPACE {
namespace {

struct Shape {
  int c = 0;
  int h = 0;
  int w = 0;
};

int out_extent(int in, int stride) { return (in + stride - 1) / stride; }

std::string hw(int h, int w) { return std::to_string(h) + "x" + std::to_string(w); }

// Mirrors the construction rules of blocks, interactions and the head,
// emitting one LayerCost per primitive the forward pass would execute.
class Walker {
 public:
  explicit Walker(CostReport& r) : r_(r) {}

  Shape conv(const std::string& id, Shape in, int cout, int k, int stride, int groups,
             bool bias) {
    Shape out{cout, out_extent(in.h, stride), out_extent(in.w, stride)};
    LayerCost l = base(id, "conv", in, out);
    const std::int64_t per_out = std::int64_t(k) * k * (in.c / groups);
    l.flops = 2 * per_out * cout * out.h * out.w;
    l.params = per_out * cout + (bias ? cout : 0);
    l.kernel = k;
    l.stride = stride;
    l.groups = groups;
    l.signature = "conv" + std::to_string(k) + "x" + std::to_string(k) +
                  "/cin=" + std::to_string(in.c) + "/cout=" + std::to_string(cout) +
                  "/hw=" + hw(in.h, in.w) + "/stride=" + std::to_string(stride);
    if (groups > 1) l.signature += "/groups=" + std::to_string(groups);
    r_.add(std::move(l));
    return out;
  }

  // Norm, activation and other per-element ops on `in`.
  Shape pointwise(const std::string& id, const char* kind, Shape in, std::int64_t params = 0) {
    LayerCost l = base(id, kind, in, in);
    l.flops = std::int64_t(in.c) * in.h * in.w;
    l.params = params;
    l.signature = std::string(kind) + "/c=" + std::to_string(in.c) + "/hw=" + hw(in.h, in.w);
    r_.add(std::move(l));
    return in;
  }

  Shape norm(const std::string& id, Shape in) { return pointwise(id, "norm", in, 2 * in.c); }

  Shape resize(const std::string& id, Shape in, int oh, int ow) {
    if (in.h == oh && in.w == ow) return in;
    Shape out{in.c, oh, ow};
    LayerCost l = base(id, "resize", in, out);
    l.flops = 8 * std::int64_t(in.c) * oh * ow;
    l.signature = "resize/c=" + std::to_string(in.c) + "/hw=" + hw(in.h, in.w) +
                  "/out=" + hw(oh, ow);
    r_.add(std::move(l));
    return out;
  }

  // Zero-FLOP data movement (concat, slice, shuffle).
  Shape move(const std::string& id, const char* kind, Shape in, Shape out) {
    LayerCost l = base(id, kind, in, out);
    l.signature = std::string(kind) + "/c=" + std::to_string(out.c) + "/hw=" + hw(out.h, out.w);
    r_.add(std::move(l));
    return out;
  }

  Shape conv_norm(const std::string& prefix, const std::string& conv_name,
                  const std::string& norm_name, Shape in, int cout, int k, int stride = 1,
                  int groups = 1, bool relu = true) {
    Shape y = conv(prefix + "/" + conv_name, in, cout, k, stride, groups, false);
    y = norm(prefix + "/" + norm_name, y);
    if (relu) y = pointwise(prefix + "/" + norm_name + "/relu", "relu", y);
    return y;
  }

  Shape block(BlockKind kind, const std::string& p, Shape in, int cout, int stride);
  void interaction(InteractionKind kind, const std::string& p, Shape high, Shape low);

 private:
  static LayerCost base(const std::string& id, const char* kind, Shape in, Shape out) {
    LayerCost l;
    l.layer_id = id;
    l.kind = kind;
    l.in_c = in.c;
    l.in_h = in.h;
    l.in_w = in.w;
    l.out_c = out.c;
    l.out_h = out.h;
    l.out_w = out.w;
    return l;
  }

  Shape shortcut(const std::string& p, Shape in, int cout, int stride, int index) {
    if (stride == 1 && in.c == cout) return in;
    return conv_norm(p, "conv" + std::to_string(index), "norm" + std::to_string(index), in, cout,
                     1, stride, 1, false);
  }

  CostReport& r_;
};

Shape Walker::block(BlockKind kind, const std::string& p, Shape in, int cout, int stride) {
  switch (kind) {
    case BlockKind::kConv3x3:
      return conv_norm(p, "conv", "norm", in, cout, 3, stride);
    case BlockKind::kSepConv3x3: {
      Shape y = conv_norm(p, "conv1", "norm1", in, in.c, 3, stride, in.c);
      return conv_norm(p, "conv2", "norm2", y, cout, 1);
    }
    case BlockKind::kResidual: {
      Shape y = conv_norm(p, "conv1", "norm1", in, cout, 3, stride);
      y = conv_norm(p, "conv2", "norm2", y, cout, 3, 1, 1, false);
      shortcut(p, in, cout, stride, 3);
      pointwise(p + "/add", "add", y);
      return pointwise(p + "/relu", "relu", y);
    }
    case BlockKind::kBottleneck: {
      const int mid = std::max(1, cout / 4);
      Shape y = conv_norm(p, "conv1", "norm1", in, mid, 1);
      y = conv_norm(p, "conv2", "norm2", y, mid, 3, stride);
      y = conv_norm(p, "conv3", "norm3", y, cout, 1, 1, 1, false);
      shortcut(p, in, cout, stride, 4);
      pointwise(p + "/add", "add", y);
      return pointwise(p + "/relu", "relu", y);
    }
    case BlockKind::kShuffleUnit: {
      if (cout % 2 != 0) {
        throw InvalidArgument("ShuffleUnit needs an even output width, got " +
                              std::to_string(cout));
      }
      const int half = cout / 2;
      Shape out{cout, out_extent(in.h, stride), out_extent(in.w, stride)};
      if (stride == 1 && in.c == cout) {
        Shape part{half, in.h, in.w};
        move(p + "/slice1", "slice", in, part);
        move(p + "/slice2", "slice", in, part);
        Shape y = conv_norm(p, "conv1", "norm1", part, half, 1);
        y = conv_norm(p, "conv2", "norm2", y, half, 3, 1, half, false);
        conv_norm(p, "conv3", "norm3", y, half, 1);
      } else {
        Shape s = conv_norm(p, "conv1", "norm1", in, in.c, 3, stride, in.c, false);
        conv_norm(p, "conv2", "norm2", s, half, 1);
        Shape y = conv_norm(p, "conv3", "norm3", in, half, 1);
        y = conv_norm(p, "conv4", "norm4", y, half, 3, stride, half, false);
        conv_norm(p, "conv5", "norm5", y, half, 1);
      }
      move(p + "/concat", "concat", out, out);
      return move(p + "/shuffle", "shuffle", out, out);
    }
    case BlockKind::kInvertedResidual: {
      const int e = in.c * kInvertedResidualExpansion;
      Shape y = conv_norm(p, "conv1", "norm1", in, e, 1);
      y = conv_norm(p, "conv2", "norm2", y, e, 3, stride, e);
      y = conv_norm(p, "conv3", "norm3", y, cout, 1, 1, 1, false);
      if (stride == 1 && in.c == cout) pointwise(p + "/add", "add", y);
      return y;
    }
    case BlockKind::kGhostModule: {
      if (cout % 2 != 0) {
        throw InvalidArgument("GhostModule needs an even output width, got " +
                              std::to_string(cout));
      }
      const int half = cout / 2;
      Shape x = in;
      if (stride != 1) x = conv_norm(p, "conv1", "norm1", in, in.c, 3, stride, in.c, false);
      Shape y = conv_norm(p, "conv2", "norm2", x, half, 1);
      conv_norm(p, "conv3", "norm3", y, half, 3, 1, half);
      Shape out{cout, y.h, y.w};
      return move(p + "/concat", "concat", out, out);
    }
  }
  throw InvalidArgument("unknown block kind");
}

void Walker::interaction(InteractionKind kind, const std::string& p, Shape high, Shape low) {
  const int c = high.c;
  Shape gate_low{1, low.h, low.w};
  Shape gate_high{1, high.h, high.w};
  switch (kind) {
    case InteractionKind::kNone:
      return;
    case InteractionKind::kDirectA: {
      Shape fl = conv_norm(p + "/low", "conv", "norm", low, c, 3);
      resize(p + "/up", fl, high.h, high.w);
      pointwise(p + "/add", "add", high);
      return;
    }
    case InteractionKind::kDirectB: {
      Shape fl = conv_norm(p + "/low", "conv", "norm", low, c, 3);
      resize(p + "/up", fl, high.h, high.w);
      Shape cat = move(p + "/concat", "concat", {2 * c, high.h, high.w}, {2 * c, high.h, high.w});
      conv_norm(p + "/fuse", "conv", "norm", cat, c, 1);
      return;
    }
    case InteractionKind::kAttentionA: {
      conv(p + "/att/conv", low, 1, 1, 1, 1, true);
      pointwise(p + "/att/sigmoid", "sigmoid", gate_low);
      Shape fl = conv_norm(p + "/low", "conv", "norm", low, c, 3);
      pointwise(p + "/low/mul", "mul", fl);
      Shape fh = conv_norm(p + "/high", "conv", "norm", high, c, 3);
      pointwise(p + "/att/one_minus", "one_minus", gate_low);
      resize(p + "/att/up", gate_low, high.h, high.w);
      pointwise(p + "/high/mul", "mul", fh);
      resize(p + "/up", fl, high.h, high.w);
      pointwise(p + "/add", "add", high);
      return;
    }
    case InteractionKind::kAttentionB: {
      conv(p + "/att_low/conv", low, 1, 1, 1, 1, true);
      pointwise(p + "/att_low/sigmoid", "sigmoid", gate_low);
      conv(p + "/att_high/conv", high, 1, 1, 1, 1, true);
      pointwise(p + "/att_high/sigmoid", "sigmoid", gate_high);
      Shape fl = conv_norm(p + "/low", "conv", "norm", low, c, 3);
      Shape fh = conv_norm(p + "/high", "conv", "norm", high, c, 3);
      // high output
      pointwise(p + "/to_high/mul_low", "mul", fl);
      resize(p + "/to_high/up", fl, high.h, high.w);
      pointwise(p + "/to_high/one_minus", "one_minus", gate_low);
      resize(p + "/to_high/gate_up", gate_low, high.h, high.w);
      pointwise(p + "/to_high/mul_high", "mul", fh);
      pointwise(p + "/to_high/add", "add", high);
      // low output
      pointwise(p + "/to_low/mul_high", "mul", fh);
      resize(p + "/to_low/down", fh, low.h, low.w);
      pointwise(p + "/to_low/one_minus", "one_minus", gate_high);
      resize(p + "/to_low/gate_down", gate_high, low.h, low.w);
      pointwise(p + "/to_low/mul_low", "mul", fl);
      pointwise(p + "/to_low/add", "add", low);
      return;
    }
    case InteractionKind::kBilateralA: {
      Shape lh = conv_norm(p + "/low_to_high", "conv", "norm", low, c, 1);
      resize(p + "/up", lh, high.h, high.w);
      Shape hl = conv_norm(p + "/high_to_low", "conv", "norm", high, c, 1);
      resize(p + "/down", hl, low.h, low.w);
      pointwise(p + "/add_high", "add", high);
      pointwise(p + "/add_low", "add", low);
      return;
    }
    case InteractionKind::kBilateralB: {
      resize(p + "/up", low, high.h, high.w);
      resize(p + "/down", high, low.h, low.w);
      pointwise(p + "/add_high", "add", high);
      pointwise(p + "/add_low", "add", low);
      return;
    }
  }
}

}  // namespace

void CostReport::add(LayerCost layer) {
  total_flops += layer.flops;
  total_params += layer.params;
  per_layer.push_back(std::move(layer));
}

CostReport count_flops(const NetworkSpec& spec, BlockKind block_kind,
                       InteractionKind interaction_kind, int num_classes, int h, int w) {
  if (auto v = validate(spec); !v.empty()) {
    throw InvalidArgument("count_flops: invalid spec: " + v.front());
  }
  if (h < kMinCostInputSize || w < kMinCostInputSize) {
    throw InvalidArgument("count_flops: resolution " + hw(h, w) + " is below the " +
                          hw(kMinCostInputSize, kMinCostInputSize) + " minimum");
  }
  if (num_classes < 1) throw InvalidArgument("count_flops: num_classes must be positive");
  const int paths = spec.active_paths();
  if (interaction_kind != InteractionKind::kNone && paths < 2) {
    throw InvalidArgument("count_flops: interaction " + std::string(to_string(interaction_kind)) +
                          " needs at least two active paths");
  }

  CostReport report;
  report.input_h = h;
  report.input_w = w;
  Walker walk(report);

  std::vector<Shape> x(paths);
  const auto sizes = path_input_sizes(spec, h, w);
  for (int i = 0; i < paths; ++i) {
    x[i] = walk.resize("path" + std::to_string(i + 1) + "/input", {3, h, w}, sizes[i].h,
                       sizes[i].w);
  }
  for (int j = 0; j < kNumStages; ++j) {
    for (int i = 0; i < paths; ++i) {
      for (int k = 0; k < spec.depths[j]; ++k) {
        const std::string prefix = "path" + std::to_string(i + 1) + "/stage" +
                                   std::to_string(j + 1) + "/block" + std::to_string(k + 1);
        x[i] = walk.block(block_kind, prefix, x[i], spec.widths[j],
                          k == 0 ? kStageStrides[j] : 1);
      }
    }
    if (j >= kFirstInteractionStage && interaction_kind != InteractionKind::kNone) {
      for (int p = 0; p + 1 < paths; ++p) {
        const std::string prefix = "interaction/stage" + std::to_string(j + 1) + "/pair" +
                                   std::to_string(p + 1);
        walk.interaction(interaction_kind, prefix, x[p], x[p + 1]);
      }
    }
  }
  if (paths > 0 && x[0].h < 1) throw ShapeError("count_flops: stage with zero spatial extent");

  int th = 0, tw = 0;
  for (const auto& s : x) {
    th = std::max(th, s.h);
    tw = std::max(tw, s.w);
  }
  for (int i = 0; i < paths; ++i) {
    walk.resize("head/up" + std::to_string(i + 1), x[i], th, tw);
  }
  Shape merged{spec.widths[4] * paths, th, tw};
  if (paths > 1) walk.move("head/concat", "concat", merged, merged);
  Shape y = walk.conv_norm("head", "conv", "norm", merged, spec.widths[4], 3);
  y = walk.conv("head/classifier", y, num_classes, 1, 1, 1, true);
  walk.resize("head/upsample", y, h, w);
  return report;
}

CostReport count_block_flops(BlockKind kind, int cin, int cout, int h, int w, int stride) {
  if (cin < 1 || cout < 1 || h < 1 || w < 1 || stride < 1) {
    throw InvalidArgument("count_block_flops: non-positive shape");
  }
  CostReport report;
  report.input_h = h;
  report.input_w = w;
  Walker(report).block(kind, "block", {cin, h, w}, cout, stride);
  return report;
}

LayerCost count_conv_flops(int cin, int cout, int k, int h, int w, int stride, int groups,
                           bool bias) {
  if (cin < 1 || cout < 1 || k < 1 || h < 1 || w < 1 || stride < 1 || groups < 1 ||
      cin % groups || cout % groups) {
    throw InvalidArgument("count_conv_flops: bad convolution geometry");
  }
  CostReport report;
  Walker(report).conv("conv", {cin, h, w}, cout, k, stride, groups, bias);
  return report.per_layer.front();
}

void write_cost_csv(const CostReport& report, std::ostream& out) {
  out << "layer_id,flops,params,out_c,out_h,out_w\n";
  for (const auto& l : report.per_layer) {
    out << l.layer_id << ',' << l.flops << ',' << l.params << ',' << l.out_c << ',' << l.out_h
        << ',' << l.out_w << '\n';
  }
}

void write_cost_csv(const CostReport& report, const std::string& path) {
  std::ofstream out(path);
  if (!out) throw Error("cannot write '" + path + "'");
  write_cost_csv(report, out);
}

double median(std::vector<double> values) {
  if (values.empty()) throw InvalidArgument("median of an empty sample");
  const std::size_t mid = values.size() / 2;
  std::nth_element(values.begin(), values.begin() + mid, values.end());
  const double upper = values[mid];
  if (values.size() % 2 == 1) return upper;
  const double lower = *std::max_element(values.begin(), values.begin() + mid);
  return 0.5 * (lower + upper);
}

LatencyMeasurement measure_latency(const std::function<void()>& runner, int warmup_runs,
                                   int measure_runs, std::string device_label) {
  if (warmup_runs < 0 || measure_runs < 1) {
    throw InvalidArgument("measure_latency: need warmup_runs >= 0 and measure_runs >= 1");
  }
  using Clock = std::chrono::steady_clock;
  static_assert(Clock::is_steady);
  LatencyMeasurement m;
  m.warmup_runs = warmup_runs;
  m.measure_runs = measure_runs;
  m.device_label = std::move(device_label);
  m.samples_ms.reserve(measure_runs);
  auto call = [&](const char* phase, int i) {
    try {
      runner();
    } catch (const std::exception& e) {
      throw Error("measure_latency: " + std::string(phase) + " run " + std::to_string(i) +
                  " failed: " + e.what());
    }
  };
  for (int i = 0; i < warmup_runs; ++i) call("warmup", i);
  for (int i = 0; i < measure_runs; ++i) {
    const auto t0 = Clock::now();
    call("timed", i);
    const auto t1 = Clock::now();
    m.samples_ms.push_back(std::chrono::duration<double, std::milli>(t1 - t0).count());
  }
  m.median_ms = median(m.samples_ms);
  return m;
}

double flops_efficiency(std::int64_t flops, double latency_ms) {
  if (!(latency_ms > 0.0)) throw InvalidArgument("flops_efficiency: latency must be positive");
  if (flops < 0) throw InvalidArgument("flops_efficiency: negative FLOPs");
  return double(flops) / (latency_ms * 1e6);
}

DeviceProfile parse_device_profile(const std::string& text) {
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(text);
  } catch (const nlohmann::json::parse_error& e) {
    throw ParseError(std::string("device profile: ") + e.what());
  }
  if (!j.is_object()) throw ParseError("device profile: expected a JSON object");
  DeviceProfile p;
  if (auto it = j.find("default_mflops_per_ms"); it != j.end() && !it->is_null()) {
    if (!it->is_number() || it->get<double>() <= 0.0) {
      throw ParseError("device profile: default_mflops_per_ms must be a positive number");
    }
    p.default_mflops_per_ms = it->get<double>();
  }
  if (auto it = j.find("layers"); it != j.end()) {
    if (!it->is_object()) throw ParseError("device profile: 'layers' must be an object");
    for (const auto& [sig, ms] : it->items()) {
      if (!ms.is_number() || ms.get<double>() < 0.0) {
        throw ParseError("device profile: layer '" + sig + "' needs a non-negative ms value");
      }
      p.layers[sig] = ms.get<double>();
    }
  }
  return p;
}

DeviceProfile load_device_profile(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ParseError("cannot open device profile '" + path + "'");
  std::string text((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
  try {
    return parse_device_profile(text);
  } catch (const ParseError& e) {
    throw ParseError(path + ": " + e.what());
  }
}

void save_device_profile(const DeviceProfile& profile, const std::string& path) {
  nlohmann::json j;
  if (profile.default_mflops_per_ms) j["default_mflops_per_ms"] = *profile.default_mflops_per_ms;
  j["layers"] = nlohmann::json::object();
  for (const auto& [sig, ms] : profile.layers) j["layers"][sig] = ms;
  std::ofstream out(path);
  if (!out) throw Error("cannot write '" + path + "'");
  out << j.dump(2) << '\n';
}

double estimate_latency(const CostReport& report, const DeviceProfile& profile) {
  double total = 0.0;
  for (const auto& l : report.per_layer) {
    if (auto it = profile.layers.find(l.signature); it != profile.layers.end()) {
      total += it->second;
    } else if (profile.default_mflops_per_ms) {
      total += double(l.flops) / (*profile.default_mflops_per_ms * 1e6);
    } else {
      throw Error("estimate_latency: no profile entry for layer signature '" + l.signature +
                  "' and no default rate");
    }
  }
  return total;
}

namespace {

Tensor random_tensor(Dims d, std::mt19937& rng) {
  Tensor t(d);
  std::uniform_real_distribution<double> dist(-1.0, 1.0);
  for (auto& v : t.values()) v = Real(dist(rng));
  return t;
}

// A closure executing `l` once on preallocated random inputs.
std::function<void()> layer_runner(const LayerCost& l, std::mt19937& rng) {
  const Dims in{1, l.in_c, l.in_h, l.in_w};
  const Dims out{1, l.out_c, l.out_h, l.out_w};
  Var x(random_tensor(in, rng));
  if (l.kind == "conv") {
    Var w(random_tensor({l.out_c, l.in_c / l.groups, l.kernel, l.kernel}, rng));
    const int stride = l.stride, groups = l.groups;
    return [x, w, stride, groups] { ops::conv2d(x, w, Var(), stride, groups); };
  }
  if (l.kind == "norm") {
    auto mean = std::make_shared<Tensor>(Dims{l.in_c, 1, 1, 1}, Real(0));
    auto var = std::make_shared<Tensor>(Dims{l.in_c, 1, 1, 1}, Real(1));
    Var g(Tensor(Dims{l.in_c, 1, 1, 1}, Real(1)));
    Var b(Tensor(Dims{l.in_c, 1, 1, 1}, Real(0)));
    return [x, g, b, mean, var] {
      ops::batch_norm(x, g, b, {mean.get(), var.get()}, false);
    };
  }
  if (l.kind == "relu") return [x] { ops::relu(x); };
  if (l.kind == "sigmoid") return [x] { ops::sigmoid(x); };
  if (l.kind == "one_minus") return [x] { ops::one_minus(x); };
  if (l.kind == "add") {
    Var y(random_tensor(in, rng));
    return [x, y] { ops::add(x, y); };
  }
  if (l.kind == "mul") {
    Var gate(random_tensor({1, 1, l.in_h, l.in_w}, rng));
    return [x, gate] { ops::mul_broadcast(x, gate); };
  }
  if (l.kind == "resize") {
    const int oh = l.out_h, ow = l.out_w;
    return [x, oh, ow] { ops::resize_bilinear(x, oh, ow); };
  }
  if (l.kind == "concat") {
    std::array<Var, 2> parts = {Var(random_tensor({1, out.c / 2, out.h, out.w}, rng)),
                                Var(random_tensor({1, out.c - out.c / 2, out.h, out.w}, rng))};
    return [parts] { ops::concat_channels(parts); };
  }
  if (l.kind == "slice") {
    const int count = l.out_c;
    return [x, count] { ops::slice_channels(x, 0, count); };
  }
  if (l.kind == "shuffle") return [x] { ops::channel_shuffle(x, 2); };
  throw InvalidArgument("calibrate_profile: unknown layer kind '" + l.kind + "'");
}

}  // namespace

DeviceProfile calibrate_profile(const CostReport& report, int warmup_runs, int measure_runs,
                                std::optional<double> default_mflops_per_ms) {
  NoGradGuard no_grad;
  DeviceProfile profile;
  profile.default_mflops_per_ms = default_mflops_per_ms;
  std::mt19937 rng(0);
  for (const auto& l : report.per_layer) {
    if (profile.layers.count(l.signature)) continue;
    auto run = layer_runner(l, rng);
    profile.layers[l.signature] = measure_latency(run, warmup_runs, measure_runs).median_ms;
  }
  return profile;
}

}  // namespace lpsnet
