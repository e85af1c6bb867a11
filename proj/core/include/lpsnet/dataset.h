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
#include <memory>
#include <string>
#include <vector>

#include "lpsnet/config.h"
#include "lpsnet/tensor.h"

namespace lpsnet::inline LPSNET_ABI_NAMESPACE {

// image: 1 x 3 x H x W in [0, 1]; label: 1 x H x W class ids, 255 = ignore.
struct SegSample {
  Tensor image;
  LabelMap label;
};

class Dataset {
 public:
  virtual ~Dataset() = default;
  virtual std::size_t size() const = 0;
  virtual SegSample get(std::size_t index) const = 0;
  // Identifies a sample in error messages (file stem, or "synth[i]").
  virtual std::string sample_name(std::size_t index) const = 0;
};

struct DatasetSplit {
  std::shared_ptr<const Dataset> train;
  std::shared_ptr<const Dataset> val;
};

inline constexpr int kMinSynthClasses = 2;
inline constexpr int kMaxSynthClasses = 8;

// n images of filled rectangles, ellipses and triangles on a textured
// background. Class 0 is background; each foreground class has its own
// shape family and base color. The first 80% of indices form the training
// split. Samples are generated on demand and depend only on (seed, index).
DatasetSplit synth_shapes(int n, int num_classes, int h, int w, std::uint64_t seed);

// root/images/<split>/<stem>.png (RGB) paired with root/labels/<split>/<stem>.png
// (8-bit index map). Pairing and sizes are checked up front; pixels load lazily.
std::shared_ptr<const Dataset> load_directory_dataset(const std::string& root,
                                                      const std::string& split);

}  // namespace lpsnet
