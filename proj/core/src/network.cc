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

#include "lpsnet/network.h"

#include <algorithm>

#include "lpsnet/error.h"

namespace lpsnet::inline LPSNET_ABI_NAMESPACE {

int round16(ScalingRatio ratio, int extent) {
  // ratio * extent = eighths * extent / 8; nearest multiple of 16 is
  // floor((eighths * extent + 64) / 128) * 16.
  const long long scaled = static_cast<long long>(ratio.eighths) * extent;
  const long long m = (scaled + 64) / 128;
  return static_cast<int>(std::max<long long>(1, m) * 16);
}

std::vector<SpatialSize> path_input_sizes(const NetworkSpec& spec, int h, int w) {
  std::vector<SpatialSize> out;
  for (const auto& r : spec.ratios) {
    if (r.active()) out.push_back({round16(r, h), round16(r, w)});
  }
  return out;
}

InteractionKind default_interaction(const NetworkSpec& spec) {
  return spec.active_paths() >= 2 ? InteractionKind::kBilateralB : InteractionKind::kNone;
}

SegmentationHead::SegmentationHead(ParamBuilder& b, int in_channels, int width, int num_classes)
    : fuse_(b.conv_norm("head", "conv", "norm", in_channels, width, 3)),
      classifier_(b.conv("head/classifier", width, num_classes, 1, 1, 1, true)) {}

Var SegmentationHead::forward(std::span<const Var> path_features, bool training) const {
  if (path_features.empty()) throw InvalidArgument("segmentation head: no path features");
  int th = 0, tw = 0;
  for (const auto& f : path_features) {
    th = std::max(th, f.dims().h);
    tw = std::max(tw, f.dims().w);
  }
  Var merged;
  if (path_features.size() == 1) {
    merged = ops::resize_bilinear(path_features[0], th, tw);
  } else {
    std::vector<Var> up;
    up.reserve(path_features.size());
    for (const auto& f : path_features) up.push_back(ops::resize_bilinear(f, th, tw));
    merged = ops::concat_channels(up);
  }
  return classifier_.forward(fuse_.forward(merged, training));
}

NetworkInstance::~NetworkInstance() = default;

NetworkInstance NetworkInstance::build(const NetworkSpec& spec, BlockKind block_kind,
                                       InteractionKind interaction_kind, int num_classes,
                                       std::uint64_t seed) {
  if (auto v = validate(spec); !v.empty()) {
    throw InvalidArgument("build_network: invalid spec: " + v.front());
  }
  if (num_classes < 2 || num_classes > 254) {
    throw InvalidArgument("build_network: num_classes must be in [2, 254], got " +
                          std::to_string(num_classes));
  }
  const int paths = spec.active_paths();
  if (interaction_kind != InteractionKind::kNone && paths < 2) {
    throw InvalidArgument("build_network: interaction " +
                          std::string(to_string(interaction_kind)) +
                          " needs at least two active paths");
  }

  NetworkInstance net;
  net.spec_ = spec;
  net.block_kind_ = block_kind;
  net.interaction_kind_ = interaction_kind;
  net.num_classes_ = num_classes;
  net.seed_ = seed;

  ParamBuilder b(seed, net.params_);
  net.paths_.resize(paths);
  for (int i = 0; i < paths; ++i) {
    int cin = 3;
    for (int j = 0; j < kNumStages; ++j) {
      for (int k = 0; k < spec.depths[j]; ++k) {
        const std::string prefix = "path" + std::to_string(i + 1) + "/stage" +
                                   std::to_string(j + 1) + "/block" + std::to_string(k + 1);
        const int stride = k == 0 ? kStageStrides[j] : 1;
        net.paths_[i][j].push_back(make_block(block_kind, b, prefix, cin, spec.widths[j], stride));
        cin = spec.widths[j];
      }
    }
  }
  if (interaction_kind != InteractionKind::kNone) {
    for (int j = kFirstInteractionStage; j < kNumStages; ++j) {
      auto& row = net.interactions_.emplace_back();
      for (int p = 0; p + 1 < paths; ++p) {
        const std::string prefix = "interaction/stage" + std::to_string(j + 1) + "/pair" +
                                   std::to_string(p + 1);
        row.push_back(make_interaction(interaction_kind, b, prefix, spec.widths[j]));
      }
    }
  }
  net.head_ = SegmentationHead(b, spec.widths[4] * paths, spec.widths[4], num_classes);
  return net;
}

Var NetworkInstance::forward(const Var& images, bool training, StageProbe* probe) const {
  const Dims d = images.dims();
  if (d.c != 3) {
    throw InvalidArgument("forward: expected a 3-channel image, got " + std::to_string(d.c) +
                          " channels");
  }
  const auto sizes = path_input_sizes(spec_, d.h, d.w);
  const int paths = static_cast<int>(paths_.size());

  std::vector<Var> x(paths);
  for (int i = 0; i < paths; ++i) x[i] = ops::resize_bilinear(images, sizes[i].h, sizes[i].w);
  if (probe) probe->stage_outputs.assign(paths, {});

  for (int j = 0; j < kNumStages; ++j) {
    for (int i = 0; i < paths; ++i) {
      for (const auto& block : paths_[i][j]) x[i] = block->forward(x[i], training);
    }
    if (j >= kFirstInteractionStage && !interactions_.empty()) {
      const auto& row = interactions_[j - kFirstInteractionStage];
      for (int p = 0; p + 1 < paths; ++p) {
        FeaturePair out = row[p]->forward(x[p], x[p + 1], training);
        x[p] = std::move(out.high);
        x[p + 1] = std::move(out.low);
      }
    }
    if (probe) {
      for (int i = 0; i < paths; ++i) probe->stage_outputs[i][j] = x[i].dims();
    }
  }
  Var scores = head_.forward(x, training);
  return ops::resize_bilinear(scores, d.h, d.w);
}

Tensor forward(const NetworkInstance& net, const Tensor& image) {
  const Dims d = image.dims();
  if (d.c != 3) {
    throw InvalidArgument("forward: expected a 3-channel image, got " + std::to_string(d.c) +
                          " channels");
  }
  if (d.h < kMinInputSize || d.w < kMinInputSize) {
    throw InvalidArgument("forward: input " + std::to_string(d.h) + "x" + std::to_string(d.w) +
                          " below the " + std::to_string(kMinInputSize) + "x" +
                          std::to_string(kMinInputSize) + " minimum");
  }
  NoGradGuard no_grad;
  Var out = net.forward(Var(image), false);
  return out.value();
}

}  // namespace lpsnet
