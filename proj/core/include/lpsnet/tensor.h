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

#include <cstddef>
#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "lpsnet/config.h"

namespace lpsnet::inline LPSNET_ABI_NAMESPACE {

#ifdef LPSNET_REAL_DOUBLE
using Real = double;
#else
using Real = float;
#endif

// NCHW extents. Vectors (norm scales, biases) use {C, 1, 1, 1}.
struct Dims {
  int n = 1;
  int c = 1;
  int h = 1;
  int w = 1;

  std::size_t numel() const {
    return static_cast<std::size_t>(n) * c * h * w;
  }
  std::size_t plane() const { return static_cast<std::size_t>(h) * w; }
  std::string to_string() const;

  friend bool operator==(const Dims&, const Dims&) = default;
};

class Tensor {
 public:
  Tensor() = default;
  explicit Tensor(Dims dims, Real fill = Real(0));

  const Dims& dims() const { return dims_; }
  int n() const { return dims_.n; }
  int c() const { return dims_.c; }
  int h() const { return dims_.h; }
  int w() const { return dims_.w; }
  std::size_t size() const { return data_.size(); }
  bool empty() const { return data_.empty(); }

  Real* data() { return data_.data(); }
  const Real* data() const { return data_.data(); }
  std::span<Real> values() { return data_; }
  std::span<const Real> values() const { return data_; }

  Real* plane(int n, int c) { return data_.data() + (std::size_t(n) * dims_.c + c) * dims_.plane(); }
  const Real* plane(int n, int c) const {
    return data_.data() + (std::size_t(n) * dims_.c + c) * dims_.plane();
  }
  Real& at(int n, int c, int y, int x) { return plane(n, c)[std::size_t(y) * dims_.w + x]; }
  Real at(int n, int c, int y, int x) const {
    return plane(n, c)[std::size_t(y) * dims_.w + x];
  }
  Real& operator[](std::size_t i) { return data_[i]; }
  Real operator[](std::size_t i) const { return data_[i]; }

  void fill(Real v);
  void reshape(Dims dims);  // numel must match
  bool all_finite() const;

  friend bool operator==(const Tensor&, const Tensor&) = default;

 private:
  Dims dims_{0, 0, 0, 0};
  std::vector<Real> data_;
};

inline constexpr std::uint8_t kIgnoreLabel = 255;

// Per-pixel class ids for a batch, N x H x W.
struct LabelMap {
  int n = 0;
  int h = 0;
  int w = 0;
  std::vector<std::uint8_t> data;

  LabelMap() = default;
  LabelMap(int n_, int h_, int w_, std::uint8_t fill = 0)
      : n(n_), h(h_), w(w_), data(std::size_t(n_) * h_ * w_, fill) {}

  std::uint8_t& at(int i, int y, int x) { return data[(std::size_t(i) * h + y) * w + x]; }
  std::uint8_t at(int i, int y, int x) const { return data[(std::size_t(i) * h + y) * w + x]; }
};

}  // namespace lpsnet
