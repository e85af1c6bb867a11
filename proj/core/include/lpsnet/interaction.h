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
#include <memory>
#include <string>
#include <string_view>
#include <utility>

#include "lpsnet/config.h"
#include "lpsnet/modules.h"

namespace lpsnet::inline LPSNET_ABI_NAMESPACE {

enum class InteractionKind {
  kNone,
  kDirectA,
  kDirectB,
  kAttentionA,
  kAttentionB,
  kBilateralA,
  kBilateralB,
};

inline constexpr std::array<InteractionKind, 6> kAllInteractionKinds = {
    InteractionKind::kDirectA,    InteractionKind::kDirectB,    InteractionKind::kAttentionA,
    InteractionKind::kAttentionB, InteractionKind::kBilateralA, InteractionKind::kBilateralB,
};

std::string_view to_string(InteractionKind kind);
InteractionKind parse_interaction_kind(std::string_view name);

// A high/low resolution feature pair after interaction. Each branch keeps
// its input shape.
struct FeaturePair {
  Var high;
  Var low;
};

class InteractionModule {
 public:
  virtual ~InteractionModule() = default;
  virtual FeaturePair forward(const Var& high, const Var& low, bool training) const = 0;
};

// Builds the module for `channels`-wide feature pairs. kNone is rejected;
// callers skip interaction instead.
std::unique_ptr<InteractionModule> make_interaction(InteractionKind kind, ParamBuilder& builder,
                                                    const std::string& prefix, int channels);

// The parameter-free exchange: high + up(low), low + down(high), bilinear both ways.
FeaturePair interact_bilateral_b(const Var& high, const Var& low);

}  // namespace lpsnet
