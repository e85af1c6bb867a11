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

#include <string>

#include "lpsnet/config.h"
#include "lpsnet/network.h"

namespace lpsnet::inline LPSNET_ABI_NAMESPACE {

// Flat little-endian weight archive:
//
//   "LPSCKPT1"                         8-byte magic
//   u32 len, bytes                     serialized NetworkSpec (JSON)
//   u32 len, bytes                     block kind name
//   u32 len, bytes                     interaction kind name
//   i32 num_classes, u64 seed
//   u32 count                          named tensors that follow
//   { u32 len, name bytes, i32 n, i32 c, i32 h, i32 w, f32 values[n*c*h*w] } * count
//
// Tensor names follow "path{i}/stage{j}/block{b}/{conv|norm}/{weight|bias|mean|var}"
// for path blocks, plus "interaction/..." and "head/..." entries.
void save_checkpoint(const NetworkInstance& net, const std::string& path);
NetworkInstance load_checkpoint(const std::string& path);

}  // namespace lpsnet
