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

#include "lpsnet/config.h"
#include "lpsnet/modules.h"

namespace lpsnet::inline LPSNET_ABI_NAMESPACE {

enum class BlockKind {
  kConv3x3,
  kSepConv3x3,
  kResidual,
  kBottleneck,
  kShuffleUnit,
  kInvertedResidual,
  kGhostModule,
};

inline constexpr std::array<BlockKind, 7> kAllBlockKinds = {
    BlockKind::kConv3x3,     BlockKind::kSepConv3x3,       BlockKind::kResidual,
    BlockKind::kBottleneck,  BlockKind::kShuffleUnit,      BlockKind::kInvertedResidual,
    BlockKind::kGhostModule,
};

// Channel expansion of the inverted-residual hidden layer.
inline constexpr int kInvertedResidualExpansion = 6;

std::string_view to_string(BlockKind kind);
BlockKind parse_block_kind(std::string_view name);

// One convolutional block mapping (cin, H, W) to (cout, ceil(H/stride), ceil(W/stride)).
class Block {
 public:
  virtual ~Block() = default;
  virtual Var forward(const Var& x, bool training) const = 0;
};

// Parameters are registered under "<prefix>/conv[...]" and "<prefix>/norm[...]":
// single-convolution blocks use "conv"/"norm", others number their units from 1.
std::unique_ptr<Block> make_block(BlockKind kind, ParamBuilder& builder, const std::string& prefix,
                                  int cin, int cout, int stride);

}  // namespace lpsnet
