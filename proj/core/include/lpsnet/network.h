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
#include <cstdint>
#include <memory>
#include <span>
#include <vector>

#include "lpsnet/config.h"
#include "lpsnet/archspec.h"
#include "lpsnet/blocks.h"
#include "lpsnet/interaction.h"
#include "lpsnet/modules.h"

namespace lpsnet::inline LPSNET_ABI_NAMESPACE {

// Stages 1-4 open with a stride-2 block; stage 5 keeps resolution.
inline constexpr std::array<int, kNumStages> kStageStrides = {2, 2, 2, 2, 1};
// Interaction modules sit at the end of stages 3, 4 and 5 (0-based 2..4).
inline constexpr int kFirstInteractionStage = 2;
inline constexpr int kMinInputSize = 64;

// Nearest multiple of 16 to `ratio * extent`, at least 16 (ties round up).
int round16(ScalingRatio ratio, int extent);

struct SpatialSize {
  int h = 0;
  int w = 0;
  friend bool operator==(const SpatialSize&, const SpatialSize&) = default;
};

// Input size of each active path for an H x W image.
std::vector<SpatialSize> path_input_sizes(const NetworkSpec& spec, int h, int w);

// BilateralB for multi-path specs, None when only one path is active.
InteractionKind default_interaction(const NetworkSpec& spec);

// Aggregation over all paths followed by the segmentation head: upsample to
// the largest map, concatenate, 3x3 conv+norm+ReLU to `width` channels, then
// a 1x1 classifier (with bias) to num_classes.
class SegmentationHead {
 public:
  SegmentationHead() = default;
  SegmentationHead(ParamBuilder& b, int in_channels, int width, int num_classes);

  Var forward(std::span<const Var> path_features, bool training) const;
  int num_classes() const { return classifier_.out_channels(); }

 private:
  ConvNorm fuse_;
  ConvUnit classifier_;
};

// Per-path, per-stage output shapes captured during a forward pass.
struct StageProbe {
  std::vector<std::array<Dims, kNumStages>> stage_outputs;
};

class NetworkInstance {
 public:
  // Throws InvalidArgument for an invalid spec, num_classes < 2, or an
  // interaction kind other than None on a single-path spec.
  static NetworkInstance build(const NetworkSpec& spec, BlockKind block_kind,
                               InteractionKind interaction_kind, int num_classes,
                               std::uint64_t seed);

  NetworkInstance(NetworkInstance&&) noexcept = default;
  NetworkInstance& operator=(NetworkInstance&&) noexcept = default;
  ~NetworkInstance();

  // Batched forward on N x 3 x H x W images, returns N x K x H x W scores.
  Var forward(const Var& images, bool training, StageProbe* probe = nullptr) const;

  const NetworkSpec& spec() const { return spec_; }
  BlockKind block_kind() const { return block_kind_; }
  InteractionKind interaction_kind() const { return interaction_kind_; }
  int num_classes() const { return num_classes_; }
  std::uint64_t seed() const { return seed_; }

  ParameterSet& parameters() { return params_; }
  const ParameterSet& parameters() const { return params_; }
  std::size_t num_parameters() const { return params_.num_parameters(); }

 private:
  NetworkInstance() = default;

  NetworkSpec spec_;
  BlockKind block_kind_ = BlockKind::kConv3x3;
  InteractionKind interaction_kind_ = InteractionKind::kNone;
  int num_classes_ = 0;
  std::uint64_t seed_ = 0;

  ParameterSet params_;
  // paths_[i][j] holds the blocks of stage j on path i.
  std::vector<std::array<std::vector<std::unique_ptr<Block>>, kNumStages>> paths_;
  // interactions_[j - kFirstInteractionStage][p] couples paths p and p + 1.
  std::vector<std::vector<std::unique_ptr<InteractionModule>>> interactions_;
  SegmentationHead head_;
};

// Inference on one 3 x H x W image (N = 1), eval-mode norms, no tape.
// Returns 1 x num_classes x H x W. Requires H, W >= 64 and 3 channels.
Tensor forward(const NetworkInstance& net, const Tensor& image);

}  // namespace lpsnet
