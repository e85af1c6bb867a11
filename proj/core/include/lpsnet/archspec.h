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

#include <array>
#include <compare>
#include <cstdint>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "lpsnet/config.h"

namespace lpsnet::inline LPSNET_ABI_NAMESPACE {

inline constexpr int kNumStages = 5;
inline constexpr int kNumPathSlots = 3;
inline constexpr int kRatioDenominator = 8;

inline constexpr int kMaxDepth = 64;
inline constexpr int kMaxWidth = 4096;
inline constexpr int kMaxRatioEighths = 32;

// Required divisor of widths[j]; the catalog only ever adds multiples of it.
inline constexpr std::array<int, kNumStages> kWidthGranularity = {4, 8, 16, 32, 32};

// A path's input scaling ratio, held exactly as a count of eighths.
struct ScalingRatio {
  int eighths = 0;

  constexpr bool active() const { return eighths > 0; }
  constexpr double value() const { return eighths / double(kRatioDenominator); }

  // Canonical "n/8" form ("0" for an inactive slot).
  std::string to_string() const;
  // Reduced form for humans: "1", "3/4", "11/8", "0".
  std::string to_pretty_string() const;

  friend constexpr auto operator<=>(ScalingRatio, ScalingRatio) = default;
};

// Accepts "n/8" or "0". Anything else (decimals, other denominators) throws ParseError.
ScalingRatio parse_ratio(std::string_view text);

using StageVector = std::array<int, kNumStages>;
using RatioVector = std::array<ScalingRatio, kNumPathSlots>;

// One LPS-Net architecture: blocks per stage, channels per stage, and the
// per-path input scaling ratios (kept sorted high to low).
struct NetworkSpec {
  StageVector depths{};
  StageVector widths{};
  RatioVector ratios{};

  int active_paths() const;
  int total_depth() const;
  ScalingRatio max_ratio() const { return ratios[0]; }

  // Copy with ratios sorted non-increasing.
  NetworkSpec normalized() const;

  friend bool operator==(const NetworkSpec&, const NetworkSpec&) = default;
};

NetworkSpec make_spec(const StageVector& depths, const StageVector& widths,
                      const RatioVector& ratios);

enum class Dimension { kDepth, kWidth, kResolution };

std::string_view to_string(Dimension d);
Dimension parse_dimension(std::string_view text);

// One entry of the fixed expansion catalog.
struct ExpansionOp {
  Dimension dimension = Dimension::kDepth;
  int index = 0;  // position in catalog(), used for tie-breaking
  StageVector stage_delta{};
  RatioVector ratio_delta{};

  std::string to_string() const;
  friend bool operator==(const ExpansionOp&, const ExpansionOp&) = default;
};

// The ten catalog operations in tie-break order: three depth deltas, four
// width deltas, three resolution deltas.
std::span<const ExpansionOp> catalog();

NetworkSpec initial_spec();

// spec + k * op along op.dimension, normalized. Throws InvalidArgument on an
// invalid input spec or k < 1, BoundsError when a configured maximum is exceeded.
NetworkSpec apply(const NetworkSpec& spec, const ExpansionOp& op, int k);

// Every invariant violation, in a stable order. Empty means valid.
std::vector<std::string> validate(const NetworkSpec& spec);
bool is_valid(const NetworkSpec& spec);

enum class Preset { kS, kM, kL };

NetworkSpec preset(Preset p);
NetworkSpec preset(std::string_view name);  // "S", "M", "L" (case-insensitive)

inline constexpr int kSpecSchemaVersion = 1;

// JSON document with schema_version, depths, widths, ratios.
std::string serialize(const NetworkSpec& spec);
NetworkSpec parse_spec(std::string_view text);

NetworkSpec load_spec_file(const std::string& path);
void save_spec_file(const NetworkSpec& spec, const std::string& path);

// Single-line canonical key, e.g. "1 1 1 1 1|4 8 16 32 32|4/8 0 0".
// Used for memo tables and CSV columns; contains no commas.
std::string spec_key(const NetworkSpec& spec);
NetworkSpec parse_spec_key(std::string_view key);

// Space separated renderings used in CSV columns.
std::string join_stage_vector(const StageVector& v);
std::string join_ratio_vector(const RatioVector& v);

// Human readable one-liner: "B={1,3,3,10,10} C={8,24,48,96,96} R={3/4,1/4,0}".
std::string describe(const NetworkSpec& spec);

std::uint64_t spec_hash(const NetworkSpec& spec);

}  // namespace lpsnet
