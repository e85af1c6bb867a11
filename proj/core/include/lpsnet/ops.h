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

#include <span>
#include <string_view>
#include <vector>

#include "lpsnet/config.h"
#include "lpsnet/autograd.h"
#include "lpsnet/tensor.h"

namespace lpsnet::inline LPSNET_ABI_NAMESPACE {

// What an op actually executed, reported to an installed OpObserver. Shapes
// are as seen by the kernel; `weight` is set for convolutions only.
struct OpEvent {
  std::string_view op;  // "conv", "norm", "relu", "sigmoid", "add", "mul",
                        // "one_minus", "resize", "concat", "slice", "shuffle"
  Dims input;
  Dims output;
  Dims weight{0, 0, 0, 0};
  int stride = 1;
  int groups = 1;
};

class OpObserver {
 public:
  virtual ~OpObserver() = default;
  virtual void on_op(const OpEvent& event) = 0;
};

// Installs an observer for ops executed on this thread until destruction.
class ScopedOpObserver {
 public:
  explicit ScopedOpObserver(OpObserver* observer);
  ~ScopedOpObserver();
  ScopedOpObserver(const ScopedOpObserver&) = delete;
  ScopedOpObserver& operator=(const ScopedOpObserver&) = delete;

 private:
  OpObserver* previous_;
};

namespace ops {

// Square-kernel convolution with "same" padding (k / 2). Weight is
// {Cout, Cin / groups, k, k}; bias, when defined, is {Cout, 1, 1, 1}.
Var conv2d(const Var& x, const Var& weight, const Var& bias, int stride, int groups = 1);

struct NormState {
  Tensor* running_mean;
  Tensor* running_var;
  Real momentum = Real(0.1);
  Real eps = Real(1e-5);
};

// Batch normalization over (N, H, W). Training mode normalizes with batch
// statistics and updates the running estimates.
Var batch_norm(const Var& x, const Var& gamma, const Var& beta, NormState state, bool training);

Var relu(const Var& x);
Var sigmoid(const Var& x);
Var one_minus(const Var& x);
Var add(const Var& a, const Var& b);
// x * gate where gate has one channel broadcast over x's channels.
Var mul_broadcast(const Var& x, const Var& gate);

// Bilinear interpolation with half-pixel centers (align_corners = false).
// Returns x unchanged when the size already matches.
Var resize_bilinear(const Var& x, int out_h, int out_w);

Var concat_channels(std::span<const Var> xs);
Var slice_channels(const Var& x, int start, int count);
Var channel_shuffle(const Var& x, int groups);

// Mean pixelwise softmax cross-entropy over labels != kIgnoreLabel. With no
// valid pixel the loss is 0 and the gradient is zero.
Var cross_entropy(const Var& logits, const LabelMap& labels);

// Per-pixel argmax over channels.
LabelMap argmax_channels(const Tensor& scores);

// Plain tensor bilinear resize (no tape); used for images during augmentation.
Tensor resize_bilinear(const Tensor& x, int out_h, int out_w);

}  // namespace ops
}  // namespace lpsnet
