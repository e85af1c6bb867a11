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

#include <random>

#include "lpsnet/archspec.h"

namespace lpsnet::testutil {

struct SpecRange {
  int max_depth = 6;
  int max_width_multiple = 6;  // widths are granularity * [1, this]
  int max_ratio_eighths = 12;
  int max_paths = 3;
};

// A uniformly drawn valid spec within `range`.
inline NetworkSpec random_spec(std::mt19937& rng, const SpecRange& range = {}) {
  std::uniform_int_distribution<int> depth(1, range.max_depth);
  std::uniform_int_distribution<int> mult(1, range.max_width_multiple);
  std::uniform_int_distribution<int> ratio(1, range.max_ratio_eighths);
  std::uniform_int_distribution<int> paths(1, range.max_paths);
  NetworkSpec s;
  for (int j = 0; j < kNumStages; ++j) {
    s.depths[j] = depth(rng);
    s.widths[j] = kWidthGranularity[j] * mult(rng);
  }
  const int n = paths(rng);
  for (int i = 0; i < n; ++i) s.ratios[i] = {ratio(rng)};
  return s.normalized();
}

}  // namespace lpsnet::testutil
