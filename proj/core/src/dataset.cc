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

#include "lpsnet/dataset.h"

#include <algorithm>
#include <array>
#include <cmath>
#include <filesystem>
#include <numbers>
#include <random>

#include "lpsnet/error.h"
#include "lpsnet/image_io.h"

namespace lpsnet::inline LPSNET_ABI_NAMESPACE {
namespace {

namespace fs = std::filesystem;

// Base colors per class; index 0 is unused (background is textured).
constexpr std::array<std::array<double, 3>, kMaxSynthClasses> kPalette = {{
    {0.5, 0.5, 0.5},
    {0.90, 0.15, 0.15},
    {0.15, 0.80, 0.20},
    {0.15, 0.25, 0.90},
    {0.95, 0.85, 0.10},
    {0.85, 0.20, 0.85},
    {0.10, 0.85, 0.85},
    {0.98, 0.55, 0.10},
}};

enum class ShapeFamily { kRect, kEllipse, kTriangle };

ShapeFamily family_of(int cls) { return static_cast<ShapeFamily>((cls - 1) % 3); }

// Side scale giving each family the area of the rectangle with the same box.
double area_scale(ShapeFamily f) {
  switch (f) {
    case ShapeFamily::kRect:
      return 1.0;
    case ShapeFamily::kEllipse:
      return std::sqrt(4.0 / std::numbers::pi);
    case ShapeFamily::kTriangle:
      return std::sqrt(2.0);
  }
  return 1.0;
}

double edge(double ax, double ay, double bx, double by, double px, double py) {
  return (bx - ax) * (py - ay) - (by - ay) * (px - ax);
}

class SynthShapes : public Dataset {
 public:
  SynthShapes(std::size_t offset, std::size_t count, int k, int h, int w, std::uint64_t seed)
      : offset_(offset), count_(count), k_(k), h_(h), w_(w), seed_(seed) {}

  std::size_t size() const override { return count_; }
  std::string sample_name(std::size_t i) const override {
    return "synth[" + std::to_string(offset_ + i) + "]";
  }

  SegSample get(std::size_t i) const override {
    if (i >= count_) throw InvalidArgument("synth_shapes: index out of range");
    std::seed_seq seq{std::uint32_t(seed_), std::uint32_t(seed_ >> 32),
                      std::uint32_t(offset_ + i), 0x5eedu};
    std::mt19937_64 rng(seq);
    std::uniform_real_distribution<double> u(0.0, 1.0);

    SegSample s{Tensor(Dims{1, 3, h_, w_}), LabelMap(1, h_, w_, 0)};

    // Background: dull base color, low-frequency stripes and pixel noise.
    std::array<double, 3> bg;
    for (auto& v : bg) v = 0.30 + 0.25 * u(rng);
    const double fx = 0.02 + 0.08 * u(rng), fy = 0.02 + 0.08 * u(rng), phase = 6.283 * u(rng);
    std::normal_distribution<double> noise(0.0, 0.03);
    for (int y = 0; y < h_; ++y) {
      for (int x = 0; x < w_; ++x) {
        const double t = 0.08 * std::sin(fx * x + fy * y + phase);
        for (int c = 0; c < 3; ++c) s.image.at(0, c, y, x) = Real(bg[c] + t + noise(rng));
      }
    }

    const double scale = std::min(h_, w_) / 192.0;
    const int shapes = 1 + int(u(rng) * 3);
    for (int n = 0; n < shapes; ++n) {
      // The first shape cycles through the classes so none is starved.
      const int cls = n == 0 ? 1 + int((offset_ + i) % std::size_t(k_ - 1))
                             : 1 + int(u(rng) * (k_ - 1));
      const ShapeFamily fam = family_of(cls);
      std::array<double, 3> color;
      for (int c = 0; c < 3; ++c) color[c] = kPalette[cls][c] + 0.08 * (u(rng) - 0.5);
      const double side = scale * area_scale(fam);
      const double sw = (48 + 72 * u(rng)) * side, sh = (48 + 72 * u(rng)) * side;
      const double cx = u(rng) * w_, cy = u(rng) * h_;
      const double x0 = cx - sw / 2, y0 = cy - sh / 2;
      const double apex = u(rng);
      for (int y = std::max(0, int(y0)); y < std::min(h_, int(y0 + sh) + 1); ++y) {
        for (int x = std::max(0, int(x0)); x < std::min(w_, int(x0 + sw) + 1); ++x) {
          const double px = x + 0.5, py = y + 0.5;
          bool inside = false;
          switch (fam) {
            case ShapeFamily::kRect:
              inside = px >= x0 && px < x0 + sw && py >= y0 && py < y0 + sh;
              break;
            case ShapeFamily::kEllipse: {
              const double dx = (px - cx) / (sw / 2), dy = (py - cy) / (sh / 2);
              inside = dx * dx + dy * dy <= 1.0;
              break;
            }
            case ShapeFamily::kTriangle: {
              const double ax = x0 + apex * sw, ay = y0, bx = x0, by = y0 + sh, qx = x0 + sw,
                           qy = y0 + sh;
              const double e0 = edge(ax, ay, bx, by, px, py), e1 = edge(bx, by, qx, qy, px, py),
                           e2 = edge(qx, qy, ax, ay, px, py);
              inside = (e0 >= 0 && e1 >= 0 && e2 >= 0) || (e0 <= 0 && e1 <= 0 && e2 <= 0);
              break;
            }
          }
          if (!inside) continue;
          s.label.at(0, y, x) = static_cast<std::uint8_t>(cls);
          for (int c = 0; c < 3; ++c) {
            s.image.at(0, c, y, x) = Real(color[c] + 0.5 * noise(rng));
          }
        }
      }
    }
    for (auto& v : s.image.values()) v = std::clamp(v, Real(0), Real(1));
    return s;
  }

 private:
  std::size_t offset_;
  std::size_t count_;
  int k_;
  int h_;
  int w_;
  std::uint64_t seed_;
};

class DirectoryDataset : public Dataset {
 public:
  struct Entry {
    std::string stem;
    std::string image;
    std::string label;
  };
  explicit DirectoryDataset(std::vector<Entry> entries) : entries_(std::move(entries)) {}

  std::size_t size() const override { return entries_.size(); }
  std::string sample_name(std::size_t i) const override { return entries_.at(i).image; }

  SegSample get(std::size_t i) const override {
    const Entry& e = entries_.at(i);
    Raster img = read_png(e.image, 3);
    Raster lbl = read_png(e.label, 1);
    if (img.h != lbl.h || img.w != lbl.w) {
      throw ShapeError(e.label + ": label size " + std::to_string(lbl.w) + "x" +
                       std::to_string(lbl.h) + " differs from image size " +
                       std::to_string(img.w) + "x" + std::to_string(img.h));
    }
    SegSample s{raster_to_image(img), LabelMap(1, lbl.h, lbl.w)};
    s.label.data = std::move(lbl.pixels);
    return s;
  }

 private:
  std::vector<Entry> entries_;
};

}  // namespace

DatasetSplit synth_shapes(int n, int num_classes, int h, int w, std::uint64_t seed) {
  if (num_classes < kMinSynthClasses || num_classes > kMaxSynthClasses) {
    throw InvalidArgument("synth_shapes: num_classes must be in [2, 8], got " +
                          std::to_string(num_classes));
  }
  if (h < 64 || w < 64) throw InvalidArgument("synth_shapes: size must be at least 64x64");
  if (n < 1) throw InvalidArgument("synth_shapes: n must be positive");
  const std::size_t n_train = std::size_t(n) * 4 / 5;
  DatasetSplit split;
  split.train = std::make_shared<SynthShapes>(0, n_train, num_classes, h, w, seed);
  split.val = std::make_shared<SynthShapes>(n_train, n - n_train, num_classes, h, w, seed);
  return split;
}

std::shared_ptr<const Dataset> load_directory_dataset(const std::string& root,
                                                      const std::string& split) {
  const fs::path images = fs::path(root) / "images" / split;
  const fs::path labels = fs::path(root) / "labels" / split;
  if (!fs::is_directory(images)) throw ParseError("missing directory '" + images.string() + "'");
  if (!fs::is_directory(labels)) throw ParseError("missing directory '" + labels.string() + "'");

  std::vector<DirectoryDataset::Entry> entries;
  for (const auto& f : fs::directory_iterator(images)) {
    if (!f.is_regular_file() || f.path().extension() != ".png") continue;
    const std::string stem = f.path().stem().string();
    const fs::path label = labels / (stem + ".png");
    if (!fs::exists(label)) {
      throw ParseError(f.path().string() + ": no matching label '" + label.string() + "'");
    }
    entries.push_back({stem, f.path().string(), label.string()});
  }
  for (const auto& f : fs::directory_iterator(labels)) {
    if (!f.is_regular_file() || f.path().extension() != ".png") continue;
    if (!fs::exists(images / f.path().filename())) {
      throw ParseError(f.path().string() + ": no matching image");
    }
  }
  std::sort(entries.begin(), entries.end(),
            [](const auto& a, const auto& b) { return a.stem < b.stem; });
  for (const auto& e : entries) {
    if (png_size(e.image) != png_size(e.label)) {
      throw ShapeError(e.label + ": label size differs from image '" + e.image + "'");
    }
  }
  return std::make_shared<DirectoryDataset>(std::move(entries));
}

}  // namespace lpsnet
