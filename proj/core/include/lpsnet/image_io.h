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
#include <string>
#include <utility>
#include <vector>

#include "lpsnet/config.h"
#include "lpsnet/tensor.h"

namespace lpsnet::inline LPSNET_ABI_NAMESPACE {

// 8-bit raster held row-major with interleaved channels.
struct Raster {
  int h = 0;
  int w = 0;
  int channels = 0;  // 1 (index / gray) or 3 (RGB)
  std::vector<std::uint8_t> pixels;
};

// Reads a PNG converted to `channels` (1 or 3) 8-bit channels.
Raster read_png(const std::string& path, int channels);
void write_png(const Raster& raster, const std::string& path);

// Width and height from the PNG header without decoding pixels.
std::pair<int, int> png_size(const std::string& path);

// RGB raster -> 1 x 3 x H x W tensor with values in [0, 1], and back.
Tensor raster_to_image(const Raster& rgb);
Raster image_to_raster(const Tensor& image);

}  // namespace lpsnet
