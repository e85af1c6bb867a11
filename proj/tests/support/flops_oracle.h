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

#include <cstdint>

#include "lpsnet/network.h"
#include "lpsnet/ops.h"

namespace lpsnet::testutil {

// Counts FLOPs from the primitives a real forward pass executes, independent
// of the cost model's layer walk.
class TracingFlopsCounter : public OpObserver {
 public:
  void on_op(const OpEvent& e) override;
  std::int64_t flops = 0;
  int ops = 0;
};

// Builds the network, runs one H x W image through it and returns the traced
// total.
std::int64_t traced_flops(const NetworkSpec& spec, BlockKind block, InteractionKind interaction,
                          int num_classes, int h, int w);

// Loops over every output element of a dense k x k convolution, counting one
// multiply and one add per tap.
std::int64_t brute_force_conv_flops(int cin, int cout, int k, int h, int w, int stride);

}  // namespace lpsnet::testutil
