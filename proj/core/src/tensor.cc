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

#include "lpsnet/tensor.h"

#include <algorithm>
#include <cmath>

#include "lpsnet/error.h"

namespace lpsnet::inline LPSNET_ABI_NAMESPACE {

std::string Dims::to_string() const {
  return "(" + std::to_string(n) + "," + std::to_string(c) + "," + std::to_string(h) + "," +
         std::to_string(w) + ")";
}

Tensor::Tensor(Dims dims, Real fill) : dims_(dims), data_(dims.numel(), fill) {
  if (dims.n < 0 || dims.c < 0 || dims.h < 0 || dims.w < 0) {
    throw ShapeError("negative tensor extent " + dims.to_string());
  }
}

void Tensor::fill(Real v) { std::fill(data_.begin(), data_.end(), v); }

void Tensor::reshape(Dims dims) {
  if (dims.numel() != data_.size()) {
    throw ShapeError("reshape " + dims_.to_string() + " -> " + dims.to_string());
  }
  dims_ = dims;
}

bool Tensor::all_finite() const {
  return std::all_of(data_.begin(), data_.end(), [](Real v) { return std::isfinite(v); });
}

}  // namespace lpsnet
