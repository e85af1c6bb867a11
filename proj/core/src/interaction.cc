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

#include "lpsnet/interaction.h"

#include "lpsnet/error.h"

namespace lpsnet::inline LPSNET_ABI_NAMESPACE {
namespace {

void check_pair(const Var& high, const Var& low) {
  const Dims& h = high.dims();
  const Dims& l = low.dims();
  if (h.c != l.c) {
    throw ShapeError("interaction: channel mismatch " + std::to_string(h.c) + " vs " +
                     std::to_string(l.c));
  }
  if (h.n != l.n) throw ShapeError("interaction: batch mismatch");
  if (h.h < l.h || h.w < l.w) {
    throw ShapeError("interaction: high-resolution input " + h.to_string() +
                     " is smaller than low-resolution input " + l.to_string());
  }
}

Var up_to(const Var& x, const Var& like) {
  return ops::resize_bilinear(x, like.dims().h, like.dims().w);
}

// high + up(F(low)); low' = F(low).
class DirectA : public InteractionModule {
 public:
  DirectA(ParamBuilder& b, const std::string& p, int c)
      : transform_(b.conv_norm(p + "/low", "conv", "norm", c, c, 3)) {}
  FeaturePair forward(const Var& high, const Var& low, bool training) const override {
    check_pair(high, low);
    Var fl = transform_.forward(low, training);
    return {ops::add(high, up_to(fl, high)), fl};
  }

 private:
  ConvNorm transform_;
};

// concat(high, up(F(low))) fused back to C channels by a 1x1 convolution.
class DirectB : public InteractionModule {
 public:
  DirectB(ParamBuilder& b, const std::string& p, int c)
      : transform_(b.conv_norm(p + "/low", "conv", "norm", c, c, 3)),
        fuse_(b.conv_norm(p + "/fuse", "conv", "norm", 2 * c, c, 1)) {}
  FeaturePair forward(const Var& high, const Var& low, bool training) const override {
    check_pair(high, low);
    Var fl = transform_.forward(low, training);
    std::array<Var, 2> parts = {high, up_to(fl, high)};
    return {fuse_.forward(ops::concat_channels(parts), training), fl};
  }

 private:
  ConvNorm transform_;
  ConvNorm fuse_;
};

// Single-channel gate: 1x1 convolution (with bias) followed by a sigmoid.
struct Gate {
  ConvUnit conv;
  Var forward(const Var& x) const { return ops::sigmoid(conv.forward(x)); }
};

// high' = up(F(low) * a) + F(high) * up(1 - a), low' = F(low) * a, with a = Att(low).
class AttentionA : public InteractionModule {
 public:
  AttentionA(ParamBuilder& b, const std::string& p, int c)
      : f_high_(b.conv_norm(p + "/high", "conv", "norm", c, c, 3)),
        f_low_(b.conv_norm(p + "/low", "conv", "norm", c, c, 3)),
        att_{b.conv(p + "/att/conv", c, 1, 1, 1, 1, true)} {}
  FeaturePair forward(const Var& high, const Var& low, bool training) const override {
    check_pair(high, low);
    Var a = att_.forward(low);
    Var low_out = ops::mul_broadcast(f_low_.forward(low, training), a);
    Var gated_high = ops::mul_broadcast(f_high_.forward(high, training),
                                        up_to(ops::one_minus(a), high));
    return {ops::add(up_to(low_out, high), gated_high), low_out};
  }
  const ConvUnit& gate_conv() const { return att_.conv; }

 private:
  ConvNorm f_high_;
  ConvNorm f_low_;
  Gate att_;
};

// Both directions of AttentionA: each branch is gated by the attention map of
// the other path.
class AttentionB : public InteractionModule {
 public:
  AttentionB(ParamBuilder& b, const std::string& p, int c)
      : f_high_(b.conv_norm(p + "/high", "conv", "norm", c, c, 3)),
        f_low_(b.conv_norm(p + "/low", "conv", "norm", c, c, 3)),
        att_low_{b.conv(p + "/att_low/conv", c, 1, 1, 1, 1, true)},
        att_high_{b.conv(p + "/att_high/conv", c, 1, 1, 1, 1, true)} {}
  FeaturePair forward(const Var& high, const Var& low, bool training) const override {
    check_pair(high, low);
    Var a_low = att_low_.forward(low);
    Var a_high = att_high_.forward(high);
    Var fl = f_low_.forward(low, training);
    Var fh = f_high_.forward(high, training);
    const Dims& ld = low.dims();
    Var high_out = ops::add(up_to(ops::mul_broadcast(fl, a_low), high),
                            ops::mul_broadcast(fh, up_to(ops::one_minus(a_low), high)));
    Var low_out = ops::add(
        ops::resize_bilinear(ops::mul_broadcast(fh, a_high), ld.h, ld.w),
        ops::mul_broadcast(fl, ops::resize_bilinear(ops::one_minus(a_high), ld.h, ld.w)));
    return {high_out, low_out};
  }

 private:
  ConvNorm f_high_;
  ConvNorm f_low_;
  Gate att_low_;
  Gate att_high_;
};

// high + up(F_lh(low)), low + down(F_hl(high)) with 1x1 transforms.
class BilateralA : public InteractionModule {
 public:
  BilateralA(ParamBuilder& b, const std::string& p, int c)
      : low_to_high_(b.conv_norm(p + "/low_to_high", "conv", "norm", c, c, 1)),
        high_to_low_(b.conv_norm(p + "/high_to_low", "conv", "norm", c, c, 1)) {}
  FeaturePair forward(const Var& high, const Var& low, bool training) const override {
    check_pair(high, low);
    Var to_high = up_to(low_to_high_.forward(low, training), high);
    Var to_low = ops::resize_bilinear(high_to_low_.forward(high, training), low.dims().h,
                                      low.dims().w);
    return {ops::add(high, to_high), ops::add(low, to_low)};
  }

 private:
  ConvNorm low_to_high_;
  ConvNorm high_to_low_;
};

class BilateralB : public InteractionModule {
 public:
  FeaturePair forward(const Var& high, const Var& low, bool) const override {
    return interact_bilateral_b(high, low);
  }
};

}  // namespace

std::string_view to_string(InteractionKind kind) {
  switch (kind) {
    case InteractionKind::kNone:
      return "None";
    case InteractionKind::kDirectA:
      return "DirectA";
    case InteractionKind::kDirectB:
      return "DirectB";
    case InteractionKind::kAttentionA:
      return "AttentionA";
    case InteractionKind::kAttentionB:
      return "AttentionB";
    case InteractionKind::kBilateralA:
      return "BilateralA";
    case InteractionKind::kBilateralB:
      return "BilateralB";
  }
  return "?";
}

InteractionKind parse_interaction_kind(std::string_view name) {
  if (name == "None") return InteractionKind::kNone;
  for (InteractionKind k : kAllInteractionKinds) {
    if (to_string(k) == name) return k;
  }
  throw InvalidArgument("unknown interaction kind '" + std::string(name) + "'");
}

std::unique_ptr<InteractionModule> make_interaction(InteractionKind kind, ParamBuilder& b,
                                                    const std::string& prefix, int channels) {
  switch (kind) {
    case InteractionKind::kNone:
      break;
    case InteractionKind::kDirectA:
      return std::make_unique<DirectA>(b, prefix, channels);
    case InteractionKind::kDirectB:
      return std::make_unique<DirectB>(b, prefix, channels);
    case InteractionKind::kAttentionA:
      return std::make_unique<AttentionA>(b, prefix, channels);
    case InteractionKind::kAttentionB:
      return std::make_unique<AttentionB>(b, prefix, channels);
    case InteractionKind::kBilateralA:
      return std::make_unique<BilateralA>(b, prefix, channels);
    case InteractionKind::kBilateralB:
      return std::make_unique<BilateralB>();
  }
  throw InvalidArgument("make_interaction: kind None has no module");
}

FeaturePair interact_bilateral_b(const Var& high, const Var& low) {
  check_pair(high, low);
  Var up = up_to(low, high);
  Var down = ops::resize_bilinear(high, low.dims().h, low.dims().w);
  return {ops::add(high, up), ops::add(low, down)};
}

}  // namespace lpsnet
