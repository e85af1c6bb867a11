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

#include "flops_oracle.h"

#include <string_view>

namespace lpsnet::testutil {

void TracingFlopsCounter::on_op(const OpEvent& e) {
  ++ops;
  const Dims& o = e.output;
  if (e.op == "conv") {
    // weight is cout x cin/groups x k x k
    flops += 2 * std::int64_t(e.weight.c) * e.weight.h * e.weight.w * e.weight.n * o.h * o.w * o.n;
  } else if (e.op == "resize") {
    flops += 8 * std::int64_t(o.numel());
  } else if (e.op != "concat" && e.op != "slice" && e.op != "shuffle") {
    flops += std::int64_t(o.numel());
  }
}

std::int64_t traced_flops(const NetworkSpec& spec, BlockKind block, InteractionKind interaction,
                          int num_classes, int h, int w) {
  auto net = NetworkInstance::build(spec, block, interaction, num_classes, 0);
  TracingFlopsCounter counter;
  {
    ScopedOpObserver scope(&counter);
    forward(net, Tensor(Dims{1, 3, h, w}, Real(0.5)));
  }
  return counter.flops;
}

std::int64_t brute_force_conv_flops(int cin, int cout, int k, int h, int w, int stride) {
  std::int64_t count = 0;
  for (int co = 0; co < cout; ++co) {
    for (int y = 0; y < h; y += stride) {
      for (int x = 0; x < w; x += stride) {
        for (int ci = 0; ci < cin; ++ci) {
          for (int ky = 0; ky < k; ++ky) {
            for (int kx = 0; kx < k; ++kx) count += 2;  // padded taps included
          }
        }
      }
    }
  }
  return count;
}

}  // namespace lpsnet::testutil
