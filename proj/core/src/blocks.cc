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

#include "lpsnet/blocks.h"

#include <algorithm>
#include <array>

#include "lpsnet/error.h"

namespace lpsnet::inline LPSNET_ABI_NAMESPACE {
namespace {

std::string unit(const char* base, int i) { return std::string(base) + std::to_string(i); }

class Conv3x3Block : public Block {
 public:
  Conv3x3Block(ParamBuilder& b, const std::string& p, int cin, int cout, int stride)
      : body_(b.conv_norm(p, "conv", "norm", cin, cout, 3, stride)) {}
  Var forward(const Var& x, bool training) const override { return body_.forward(x, training); }

 private:
  ConvNorm body_;
};

// Depthwise 3x3 then pointwise 1x1, each with norm and ReLU.
class SepConvBlock : public Block {
 public:
  SepConvBlock(ParamBuilder& b, const std::string& p, int cin, int cout, int stride)
      : depthwise_(b.conv_norm(p, "conv1", "norm1", cin, cin, 3, stride, cin)),
        pointwise_(b.conv_norm(p, "conv2", "norm2", cin, cout, 1)) {}
  Var forward(const Var& x, bool training) const override {
    return pointwise_.forward(depthwise_.forward(x, training), training);
  }

 private:
  ConvNorm depthwise_;
  ConvNorm pointwise_;
};

// Projection shortcut whenever the block changes shape.
class Shortcut {
 public:
  Shortcut(ParamBuilder& b, const std::string& p, int cin, int cout, int stride, int index) {
    if (stride != 1 || cin != cout) {
      proj_ = b.conv_norm(p, unit("conv", index), unit("norm", index), cin, cout, 1, stride, 1,
                          false);
      has_proj_ = true;
    }
  }
  Var forward(const Var& x, bool training) const {
    return has_proj_ ? proj_.forward(x, training) : x;
  }

 private:
  bool has_proj_ = false;
  ConvNorm proj_;
};

class ResidualBlock : public Block {
 public:
  ResidualBlock(ParamBuilder& b, const std::string& p, int cin, int cout, int stride)
      : first_(b.conv_norm(p, "conv1", "norm1", cin, cout, 3, stride)),
        second_(b.conv_norm(p, "conv2", "norm2", cout, cout, 3, 1, 1, false)),
        shortcut_(b, p, cin, cout, stride, 3) {}
  Var forward(const Var& x, bool training) const override {
    Var y = second_.forward(first_.forward(x, training), training);
    return ops::relu(ops::add(y, shortcut_.forward(x, training)));
  }

 private:
  ConvNorm first_;
  ConvNorm second_;
  Shortcut shortcut_;
};

class BottleneckBlock : public Block {
 public:
  BottleneckBlock(ParamBuilder& b, const std::string& p, int cin, int cout, int stride)
      : reduce_(b.conv_norm(p, "conv1", "norm1", cin, mid(cout), 1)),
        spatial_(b.conv_norm(p, "conv2", "norm2", mid(cout), mid(cout), 3, stride)),
        expand_(b.conv_norm(p, "conv3", "norm3", mid(cout), cout, 1, 1, 1, false)),
        shortcut_(b, p, cin, cout, stride, 4) {}
  Var forward(const Var& x, bool training) const override {
    Var y = expand_.forward(spatial_.forward(reduce_.forward(x, training), training), training);
    return ops::relu(ops::add(y, shortcut_.forward(x, training)));
  }
  static int mid(int cout) { return std::max(1, cout / 4); }

 private:
  ConvNorm reduce_;
  ConvNorm spatial_;
  ConvNorm expand_;
  Shortcut shortcut_;
};

// ShuffleNetV2 unit. The split form is used when shape is preserved, the
// two-branch downsampling form otherwise.
class ShuffleBlock : public Block {
 public:
  ShuffleBlock(ParamBuilder& b, const std::string& p, int cin, int cout, int stride)
      : split_(stride == 1 && cin == cout) {
    if (cout % 2 != 0) {
      throw InvalidArgument("ShuffleUnit needs an even output width, got " + std::to_string(cout));
    }
    const int half = cout / 2;
    if (split_) {
      main_ = {b.conv_norm(p, "conv1", "norm1", half, half, 1),
               b.conv_norm(p, "conv2", "norm2", half, half, 3, 1, half, false),
               b.conv_norm(p, "conv3", "norm3", half, half, 1)};
    } else {
      side_ = {b.conv_norm(p, "conv1", "norm1", cin, cin, 3, stride, cin, false),
               b.conv_norm(p, "conv2", "norm2", cin, half, 1)};
      main_ = {b.conv_norm(p, "conv3", "norm3", cin, half, 1),
               b.conv_norm(p, "conv4", "norm4", half, half, 3, stride, half, false),
               b.conv_norm(p, "conv5", "norm5", half, half, 1)};
    }
  }
  Var forward(const Var& x, bool training) const override {
    std::array<Var, 2> parts;
    if (split_) {
      const int half = x.dims().c / 2;
      parts[0] = ops::slice_channels(x, 0, half);
      parts[1] = run(main_, ops::slice_channels(x, half, half), training);
    } else {
      parts[0] = run(side_, x, training);
      parts[1] = run(main_, x, training);
    }
    return ops::channel_shuffle(ops::concat_channels(parts), 2);
  }

 private:
  static Var run(const std::vector<ConvNorm>& seq, Var x, bool training) {
    for (const auto& cn : seq) x = cn.forward(x, training);
    return x;
  }
  bool split_;
  std::vector<ConvNorm> side_;
  std::vector<ConvNorm> main_;
};

class InvertedResidualBlock : public Block {
 public:
  InvertedResidualBlock(ParamBuilder& b, const std::string& p, int cin, int cout, int stride)
      : expand_(b.conv_norm(p, "conv1", "norm1", cin, cin * kInvertedResidualExpansion, 1)),
        depthwise_(b.conv_norm(p, "conv2", "norm2", cin * kInvertedResidualExpansion,
                               cin * kInvertedResidualExpansion, 3, stride,
                               cin * kInvertedResidualExpansion)),
        project_(b.conv_norm(p, "conv3", "norm3", cin * kInvertedResidualExpansion, cout, 1, 1, 1,
                             false)),
        residual_(stride == 1 && cin == cout) {}
  Var forward(const Var& x, bool training) const override {
    Var y =
        project_.forward(depthwise_.forward(expand_.forward(x, training), training), training);
    return residual_ ? ops::add(y, x) : y;
  }

 private:
  ConvNorm expand_;
  ConvNorm depthwise_;
  ConvNorm project_;
  bool residual_;
};

// Ghost module: a 1x1 primary convolution producing half the channels and a
// cheap depthwise 3x3 generating the other half. Strided blocks downsample
// with a depthwise 3x3 first.
class GhostBlock : public Block {
 public:
  GhostBlock(ParamBuilder& b, const std::string& p, int cin, int cout, int stride) {
    if (cout % 2 != 0) {
      throw InvalidArgument("GhostModule needs an even output width, got " + std::to_string(cout));
    }
    const int half = cout / 2;
    if (stride != 1) {
      down_ = b.conv_norm(p, "conv1", "norm1", cin, cin, 3, stride, cin, false);
      has_down_ = true;
    }
    primary_ = b.conv_norm(p, "conv2", "norm2", cin, half, 1);
    cheap_ = b.conv_norm(p, "conv3", "norm3", half, half, 3, 1, half);
  }
  Var forward(const Var& x, bool training) const override {
    Var in = has_down_ ? down_.forward(x, training) : x;
    Var prim = primary_.forward(in, training);
    std::array<Var, 2> parts = {prim, cheap_.forward(prim, training)};
    return ops::concat_channels(parts);
  }

 private:
  bool has_down_ = false;
  ConvNorm down_;
  ConvNorm primary_;
  ConvNorm cheap_;
};

}  // namespace

std::string_view to_string(BlockKind kind) {
  switch (kind) {
    case BlockKind::kConv3x3:
      return "Conv3x3";
    case BlockKind::kSepConv3x3:
      return "SepConv3x3";
    case BlockKind::kResidual:
      return "Residual";
    case BlockKind::kBottleneck:
      return "Bottleneck";
    case BlockKind::kShuffleUnit:
      return "ShuffleUnit";
    case BlockKind::kInvertedResidual:
      return "InvertedResidual";
    case BlockKind::kGhostModule:
      return "GhostModule";
  }
  return "?";
}

BlockKind parse_block_kind(std::string_view name) {
  for (BlockKind k : kAllBlockKinds) {
    if (to_string(k) == name) return k;
  }
  throw InvalidArgument("unknown block kind '" + std::string(name) + "'");
}

std::unique_ptr<Block> make_block(BlockKind kind, ParamBuilder& b, const std::string& prefix,
                                  int cin, int cout, int stride) {
  switch (kind) {
    case BlockKind::kConv3x3:
      return std::make_unique<Conv3x3Block>(b, prefix, cin, cout, stride);
    case BlockKind::kSepConv3x3:
      return std::make_unique<SepConvBlock>(b, prefix, cin, cout, stride);
    case BlockKind::kResidual:
      return std::make_unique<ResidualBlock>(b, prefix, cin, cout, stride);
    case BlockKind::kBottleneck:
      return std::make_unique<BottleneckBlock>(b, prefix, cin, cout, stride);
    case BlockKind::kShuffleUnit:
      return std::make_unique<ShuffleBlock>(b, prefix, cin, cout, stride);
    case BlockKind::kInvertedResidual:
      return std::make_unique<InvertedResidualBlock>(b, prefix, cin, cout, stride);
    case BlockKind::kGhostModule:
      return std::make_unique<GhostBlock>(b, prefix, cin, cout, stride);
  }
  throw InvalidArgument("unknown block kind");
}

}  // namespace lpsnet
