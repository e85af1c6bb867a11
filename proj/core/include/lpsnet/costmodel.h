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
#include <functional>
#include <iosfwd>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "lpsnet/config.h"
#include "lpsnet/archspec.h"
#include "lpsnet/blocks.h"
#include "lpsnet/interaction.h"

namespace lpsnet::inline LPSNET_ABI_NAMESPACE {

// One executed primitive. 1 multiply-accumulate = 2 FLOPs, biases excluded;
// norm and pointwise ops cost C*H*W, bilinear resize 8*C*Ho*Wo, concat/slice/
// shuffle are free.
struct LayerCost {
  std::string layer_id;   // e.g. "path1/stage2/block1/conv"
  std::string kind;       // conv, norm, relu, sigmoid, one_minus, add, mul, resize, ...
  std::string signature;  // profile key, e.g. "conv3x3/cin=32/cout=32/hw=128x128/stride=1"
  std::int64_t flops = 0;
  std::int64_t params = 0;
  int out_c = 1;
  int out_h = 1;
  int out_w = 1;
  // Input extent and conv geometry, kept so a layer can be re-run standalone.
  int in_c = 1;
  int in_h = 1;
  int in_w = 1;
  int kernel = 0;
  int stride = 1;
  int groups = 1;
};

struct CostReport {
  std::int64_t total_flops = 0;
  std::int64_t total_params = 0;
  std::vector<LayerCost> per_layer;
  int input_h = 0;
  int input_w = 0;

  void add(LayerCost layer);
};

inline constexpr int kMinCostInputSize = 32;

// Exact FLOPs and parameters of the network build_network would construct,
// for one image of H x W. No tensors are allocated. Throws InvalidArgument
// for an invalid spec, H or W below 32, or an interaction on a single path.
CostReport count_flops(const NetworkSpec& spec, BlockKind block_kind,
                       InteractionKind interaction_kind, int num_classes, int h, int w);

// Same walk restricted to one block on a C x H x W input.
CostReport count_block_flops(BlockKind kind, int cin, int cout, int h, int w, int stride = 1);

// Cost of a single k x k convolution on a cin x H x W input.
LayerCost count_conv_flops(int cin, int cout, int k, int h, int w, int stride = 1, int groups = 1,
                           bool bias = false);

// Writes layer_id,flops,params,out_c,out_h,out_w with a header row.
void write_cost_csv(const CostReport& report, std::ostream& out);
void write_cost_csv(const CostReport& report, const std::string& path);

struct LatencyMeasurement {
  double median_ms = 0.0;
  std::vector<double> samples_ms;
  int warmup_runs = 0;
  int measure_runs = 0;
  std::string device_label;
};

double median(std::vector<double> values);

// Runs `runner` warmup_runs times untimed, then measure_runs times on the
// steady clock. An exception from the runner is rethrown as Error with the
// failing run index.
LatencyMeasurement measure_latency(const std::function<void()>& runner, int warmup_runs = 10,
                                   int measure_runs = 50, std::string device_label = "cpu");

// MFLOPs per millisecond.
double flops_efficiency(std::int64_t flops, double latency_ms);

struct DeviceProfile {
  std::optional<double> default_mflops_per_ms;
  std::map<std::string, double> layers;  // signature -> ms
};

// JSON: {"default_mflops_per_ms": 1000, "layers": {"<signature>": ms, ...}}
DeviceProfile parse_device_profile(const std::string& text);
DeviceProfile load_device_profile(const std::string& path);
void save_device_profile(const DeviceProfile& profile, const std::string& path);

// Sum of profiled per-layer latencies; unlisted layers fall back to the
// default rate. Throws Error naming the first signature that has neither.
double estimate_latency(const CostReport& report, const DeviceProfile& profile);

// Times every distinct layer signature of `report` in isolation on this
// machine and returns the resulting profile.
DeviceProfile calibrate_profile(const CostReport& report, int warmup_runs = 3,
                                int measure_runs = 10,
                                std::optional<double> default_mflops_per_ms = std::nullopt);

}  // namespace lpsnet
