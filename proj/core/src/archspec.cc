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

#include "lpsnet/archspec.h"

#include <algorithm>
#include <cctype>
#include <charconv>
#include <fstream>
#include <functional>
#include <numeric>
#include <sstream>

#include <nlohmann/json.hpp>
#include "lpsnet/error.h"

namespace lpsnet::inline LPSNET_ABI_NAMESPACE {
namespace {

using nlohmann::json;

constexpr ExpansionOp depth_op(int index, StageVector d) {
  ExpansionOp op;
  op.dimension = Dimension::kDepth;
  op.index = index;
  op.stage_delta = d;
  return op;
}

constexpr ExpansionOp width_op(int index, StageVector d) {
  ExpansionOp op;
  op.dimension = Dimension::kWidth;
  op.index = index;
  op.stage_delta = d;
  return op;
}

constexpr ExpansionOp resolution_op(int index, int slot) {
  ExpansionOp op;
  op.dimension = Dimension::kResolution;
  op.index = index;
  op.ratio_delta[slot] = ScalingRatio{1};
  return op;
}

constexpr std::array<ExpansionOp, 10> kCatalog = {
    depth_op(0, {0, 1, 1, 1, 1}),
    depth_op(1, {0, 0, 1, 1, 1}),
    depth_op(2, {0, 0, 0, 1, 1}),
    width_op(3, {4, 8, 16, 32, 32}),
    width_op(4, {0, 8, 16, 32, 32}),
    width_op(5, {0, 0, 16, 32, 32}),
    width_op(6, {0, 0, 0, 32, 32}),
    resolution_op(7, 0),
    resolution_op(8, 1),
    resolution_op(9, 2),
};

bool parse_int(std::string_view text, int& out) {
  if (text.empty()) return false;
  auto [ptr, ec] = std::from_chars(text.data(), text.data() + text.size(), out);
  return ec == std::errc() && ptr == text.data() + text.size();
}

std::string join_ints(const StageVector& v, char sep) {
  std::string out;
  for (int i = 0; i < kNumStages; ++i) {
    if (i) out += sep;
    out += std::to_string(v[i]);
  }
  return out;
}

// 1-based line of a byte offset, for parse diagnostics.
std::size_t line_of(std::string_view text, std::size_t byte) {
  byte = std::min(byte, text.size());
  return 1 + std::count(text.begin(), text.begin() + byte, '\n');
}

StageVector read_stage_vector(const json& doc, const char* field) {
  if (!doc.contains(field)) {
    throw ParseError(std::string("spec: missing field '") + field + "'");
  }
  const json& arr = doc.at(field);
  if (!arr.is_array() || arr.size() != kNumStages) {
    throw ParseError(std::string("spec: field '") + field + "' must be an array of " +
                     std::to_string(kNumStages) + " integers");
  }
  StageVector v{};
  for (int j = 0; j < kNumStages; ++j) {
    if (!arr[j].is_number_integer()) {
      throw ParseError(std::string("spec: field '") + field + "[" + std::to_string(j) +
                       "]' is not an integer");
    }
    v[j] = arr[j].get<int>();
  }
  return v;
}

}  // namespace

std::string ScalingRatio::to_string() const {
  if (eighths == 0) return "0";
  return std::to_string(eighths) + "/" + std::to_string(kRatioDenominator);
}

std::string ScalingRatio::to_pretty_string() const {
  if (eighths == 0) return "0";
  int g = std::gcd(eighths, kRatioDenominator);
  int num = eighths / g;
  int den = kRatioDenominator / g;
  if (den == 1) return std::to_string(num);
  return std::to_string(num) + "/" + std::to_string(den);
}

ScalingRatio parse_ratio(std::string_view text) {
  if (text == "0") return ScalingRatio{0};
  auto slash = text.find('/');
  int num = 0;
  int den = 0;
  if (slash == std::string_view::npos || !parse_int(text.substr(0, slash), num) ||
      !parse_int(text.substr(slash + 1), den) || den != kRatioDenominator || num < 0) {
    throw ParseError("ratio '" + std::string(text) + "' is not of the form \"n/8\" or \"0\"");
  }
  return ScalingRatio{num};
}

int NetworkSpec::active_paths() const {
  return static_cast<int>(std::count_if(ratios.begin(), ratios.end(),
                                        [](ScalingRatio r) { return r.active(); }));
}

int NetworkSpec::total_depth() const {
  return std::accumulate(depths.begin(), depths.end(), 0);
}

NetworkSpec NetworkSpec::normalized() const {
  NetworkSpec out = *this;
  std::sort(out.ratios.begin(), out.ratios.end(), std::greater<>());
  return out;
}

NetworkSpec make_spec(const StageVector& depths, const StageVector& widths,
                      const RatioVector& ratios) {
  return NetworkSpec{depths, widths, ratios}.normalized();
}

std::string_view to_string(Dimension d) {
  switch (d) {
    case Dimension::kDepth:
      return "Depth";
    case Dimension::kWidth:
      return "Width";
    case Dimension::kResolution:
      return "Resolution";
  }
  return "?";
}

Dimension parse_dimension(std::string_view text) {
  if (text == "Depth") return Dimension::kDepth;
  if (text == "Width") return Dimension::kWidth;
  if (text == "Resolution") return Dimension::kResolution;
  throw ParseError("unknown dimension '" + std::string(text) + "'");
}

std::string ExpansionOp::to_string() const {
  std::string out(lpsnet::to_string(dimension));
  out += "{";
  if (dimension == Dimension::kResolution) {
    for (int i = 0; i < kNumPathSlots; ++i) {
      if (i) out += ",";
      out += ratio_delta[i].to_pretty_string();
    }
  } else {
    out += join_ints(stage_delta, ',');
  }
  out += "}";
  return out;
}

std::span<const ExpansionOp> catalog() { return kCatalog; }

NetworkSpec initial_spec() {
  return make_spec({1, 1, 1, 1, 1}, {4, 8, 16, 32, 32}, {ScalingRatio{4}, {}, {}});
}

NetworkSpec apply(const NetworkSpec& spec, const ExpansionOp& op, int k) {
  if (k < 1) throw InvalidArgument("apply: stepsize k must be >= 1, got " + std::to_string(k));
  if (auto v = validate(spec); !v.empty()) {
    throw InvalidArgument("apply: invalid spec: " + v.front());
  }
  NetworkSpec out = spec;
  switch (op.dimension) {
    case Dimension::kDepth:
      for (int j = 0; j < kNumStages; ++j) {
        out.depths[j] += k * op.stage_delta[j];
        if (out.depths[j] > kMaxDepth) {
          throw BoundsError("apply: depths[" + std::to_string(j) + "]=" +
                            std::to_string(out.depths[j]) + " exceeds " +
                            std::to_string(kMaxDepth));
        }
      }
      break;
    case Dimension::kWidth:
      for (int j = 0; j < kNumStages; ++j) {
        out.widths[j] += k * op.stage_delta[j];
        if (out.widths[j] > kMaxWidth) {
          throw BoundsError("apply: widths[" + std::to_string(j) + "]=" +
                            std::to_string(out.widths[j]) + " exceeds " +
                            std::to_string(kMaxWidth));
        }
      }
      break;
    case Dimension::kResolution:
      for (int i = 0; i < kNumPathSlots; ++i) {
        out.ratios[i].eighths += k * op.ratio_delta[i].eighths;
        if (out.ratios[i].eighths > kMaxRatioEighths) {
          throw BoundsError("apply: ratios[" + std::to_string(i) + "]=" +
                            out.ratios[i].to_string() + " exceeds " +
                            std::to_string(kMaxRatioEighths) + "/8");
        }
      }
      break;
  }
  return out.normalized();
}

std::vector<std::string> validate(const NetworkSpec& spec) {
  std::vector<std::string> out;
  for (int j = 0; j < kNumStages; ++j) {
    const std::string idx = "[" + std::to_string(j) + "]";
    if (spec.depths[j] < 1) out.push_back("depths" + idx + " must be >= 1");
    if (spec.depths[j] > kMaxDepth) {
      out.push_back("depths" + idx + " exceeds " + std::to_string(kMaxDepth));
    }
    if (spec.widths[j] < 1) out.push_back("widths" + idx + " must be >= 1");
    if (spec.widths[j] > kMaxWidth) {
      out.push_back("widths" + idx + " exceeds " + std::to_string(kMaxWidth));
    }
    if (spec.widths[j] % kWidthGranularity[j] != 0) {
      out.push_back("widths" + idx + " not divisible by " +
                    std::to_string(kWidthGranularity[j]));
    }
  }
  for (int i = 0; i < kNumPathSlots; ++i) {
    const std::string idx = "[" + std::to_string(i) + "]";
    if (spec.ratios[i].eighths < 0) out.push_back("ratios" + idx + " is negative");
    if (spec.ratios[i].eighths > kMaxRatioEighths) {
      out.push_back("ratios" + idx + " exceeds " + std::to_string(kMaxRatioEighths) + "/8");
    }
  }
  if (spec.active_paths() == 0) out.push_back("no active path");
  if (!std::is_sorted(spec.ratios.begin(), spec.ratios.end(), std::greater<>())) {
    out.push_back("ratios not in non-increasing order");
  }
  return out;
}

bool is_valid(const NetworkSpec& spec) { return validate(spec).empty(); }

NetworkSpec preset(Preset p) {
  const RatioVector s_ratios = {ScalingRatio{6}, ScalingRatio{2}, ScalingRatio{0}};
  const RatioVector ml_ratios = {ScalingRatio{8}, ScalingRatio{2}, ScalingRatio{0}};
  switch (p) {
    case Preset::kS:
      return make_spec({1, 3, 3, 10, 10}, {8, 24, 48, 96, 96}, s_ratios);
    case Preset::kM:
      return make_spec({1, 3, 3, 10, 10}, {8, 24, 48, 96, 96}, ml_ratios);
    case Preset::kL:
      return make_spec({1, 3, 3, 10, 10}, {8, 24, 64, 160, 160}, ml_ratios);
  }
  throw InvalidArgument("unknown preset");
}

NetworkSpec preset(std::string_view name) {
  if (name == "S" || name == "s") return preset(Preset::kS);
  if (name == "M" || name == "m") return preset(Preset::kM);
  if (name == "L" || name == "l") return preset(Preset::kL);
  throw InvalidArgument("unknown preset '" + std::string(name) + "' (expected S, M or L)");
}

std::string serialize(const NetworkSpec& spec) {
  json doc = json::object();
  doc["schema_version"] = kSpecSchemaVersion;
  doc["depths"] = spec.depths;
  doc["widths"] = spec.widths;
  json ratios = json::array();
  for (const auto& r : spec.ratios) ratios.push_back(r.to_string());
  doc["ratios"] = ratios;
  return doc.dump(2) + "\n";
}

NetworkSpec parse_spec(std::string_view text) {
  json doc;
  try {
    doc = json::parse(text.begin(), text.end());
  } catch (const json::parse_error& e) {
    throw ParseError("spec: line " + std::to_string(line_of(text, e.byte)) + ": " + e.what());
  }
  if (!doc.is_object()) throw ParseError("spec: top level must be an object");

  if (!doc.contains("schema_version") || !doc["schema_version"].is_number_integer()) {
    throw ParseError("spec: missing integer field 'schema_version'");
  }
  if (int v = doc["schema_version"].get<int>(); v != kSpecSchemaVersion) {
    throw ParseError("spec: field 'schema_version': unsupported version " + std::to_string(v));
  }

  NetworkSpec spec;
  spec.depths = read_stage_vector(doc, "depths");
  spec.widths = read_stage_vector(doc, "widths");

  if (!doc.contains("ratios")) throw ParseError("spec: missing field 'ratios'");
  const json& ratios = doc["ratios"];
  if (!ratios.is_array() || ratios.size() != kNumPathSlots) {
    throw ParseError("spec: field 'ratios' must be an array of 3 strings");
  }
  for (int i = 0; i < kNumPathSlots; ++i) {
    if (!ratios[i].is_string()) {
      throw ParseError("spec: field 'ratios[" + std::to_string(i) +
                       "]' must be a string \"n/8\" or \"0\"");
    }
    try {
      spec.ratios[i] = parse_ratio(ratios[i].get<std::string>());
    } catch (const ParseError& e) {
      throw ParseError("spec: field 'ratios[" + std::to_string(i) + "]': " + e.what());
    }
  }
  spec = spec.normalized();
  if (auto v = validate(spec); !v.empty()) {
    std::string msg = "spec: invalid: ";
    for (std::size_t i = 0; i < v.size(); ++i) msg += (i ? "; " : "") + v[i];
    throw ParseError(msg);
  }
  return spec;
}

NetworkSpec load_spec_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ParseError("cannot open spec file '" + path + "'");
  std::stringstream buf;
  buf << in.rdbuf();
  try {
    return parse_spec(buf.str());
  } catch (const ParseError& e) {
    throw ParseError(path + ": " + e.what());
  }
}

void save_spec_file(const NetworkSpec& spec, const std::string& path) {
  std::ofstream out(path);
  if (!out) throw Error("cannot write spec file '" + path + "'");
  out << serialize(spec);
}

std::string join_stage_vector(const StageVector& v) { return join_ints(v, ' '); }

std::string join_ratio_vector(const RatioVector& v) {
  std::string out;
  for (int i = 0; i < kNumPathSlots; ++i) {
    if (i) out += ' ';
    out += v[i].to_string();
  }
  return out;
}

std::string spec_key(const NetworkSpec& spec) {
  return join_stage_vector(spec.depths) + "|" + join_stage_vector(spec.widths) + "|" +
         join_ratio_vector(spec.ratios);
}

NetworkSpec parse_spec_key(std::string_view key) {
  auto fail = [&](const std::string& why) -> ParseError {
    return ParseError("spec key '" + std::string(key) + "': " + why);
  };
  std::vector<std::string_view> parts;
  std::size_t start = 0;
  for (std::size_t i = 0; i <= key.size(); ++i) {
    if (i == key.size() || key[i] == '|') {
      parts.push_back(key.substr(start, i - start));
      start = i + 1;
    }
  }
  if (parts.size() != 3) throw fail("expected three '|' separated groups");

  auto tokens = [](std::string_view s) {
    std::vector<std::string_view> out;
    std::size_t i = 0;
    while (i < s.size()) {
      while (i < s.size() && s[i] == ' ') ++i;
      std::size_t j = i;
      while (j < s.size() && s[j] != ' ') ++j;
      if (j > i) out.push_back(s.substr(i, j - i));
      i = j;
    }
    return out;
  };

  NetworkSpec spec;
  for (int g = 0; g < 2; ++g) {
    auto t = tokens(parts[g]);
    if (t.size() != kNumStages) throw fail("expected 5 integers in group " + std::to_string(g));
    for (int j = 0; j < kNumStages; ++j) {
      int v = 0;
      if (!parse_int(t[j], v)) throw fail("'" + std::string(t[j]) + "' is not an integer");
      (g == 0 ? spec.depths : spec.widths)[j] = v;
    }
  }
  auto t = tokens(parts[2]);
  if (t.size() != kNumPathSlots) throw fail("expected 3 ratios");
  for (int i = 0; i < kNumPathSlots; ++i) spec.ratios[i] = parse_ratio(t[i]);
  spec = spec.normalized();
  if (auto v = validate(spec); !v.empty()) throw fail(v.front());
  return spec;
}

std::string describe(const NetworkSpec& spec) {
  std::string out = "B={" + join_ints(spec.depths, ',') + "} C={" + join_ints(spec.widths, ',') +
                    "} R={";
  for (int i = 0; i < kNumPathSlots; ++i) {
    if (i) out += ",";
    out += spec.ratios[i].to_pretty_string();
  }
  return out + "}";
}

std::uint64_t spec_hash(const NetworkSpec& spec) {
  // FNV-1a over the canonical key.
  std::uint64_t h = 1469598103934665603ull;
  for (unsigned char c : spec_key(spec)) {
    h ^= c;
    h *= 1099511628211ull;
  }
  return h;
}

}  // namespace lpsnet
