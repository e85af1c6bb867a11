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

#include "lpsnet/image_io.h"

#include <png.h>

#include <algorithm>
#include <cmath>
#include <cstring>

#include "lpsnet/error.h"

namespace lpsnet::inline LPSNET_ABI_NAMESPACE {

Raster read_png(const std::string& path, int channels) {
  if (channels != 1 && channels != 3) throw InvalidArgument("read_png: channels must be 1 or 3");
  png_image image;
  std::memset(&image, 0, sizeof(image));
  image.version = PNG_IMAGE_VERSION;
  if (!png_image_begin_read_from_file(&image, path.c_str())) {
    throw ParseError(path + ": " + image.message);
  }
  image.format = channels == 1 ? PNG_FORMAT_GRAY : PNG_FORMAT_RGB;
  Raster r;
  r.h = static_cast<int>(image.height);
  r.w = static_cast<int>(image.width);
  r.channels = channels;
  r.pixels.resize(PNG_IMAGE_SIZE(image));
  if (!png_image_finish_read(&image, nullptr, r.pixels.data(), 0, nullptr)) {
    png_image_free(&image);
    throw ParseError(path + ": " + image.message);
  }
  return r;
}

std::pair<int, int> png_size(const std::string& path) {
  png_image image;
  std::memset(&image, 0, sizeof(image));
  image.version = PNG_IMAGE_VERSION;
  if (!png_image_begin_read_from_file(&image, path.c_str())) {
    throw ParseError(path + ": " + image.message);
  }
  std::pair<int, int> wh{static_cast<int>(image.width), static_cast<int>(image.height)};
  png_image_free(&image);
  return wh;
}

void write_png(const Raster& raster, const std::string& path) {
  if (raster.channels != 1 && raster.channels != 3) {
    throw InvalidArgument("write_png: channels must be 1 or 3");
  }
  if (raster.pixels.size() != std::size_t(raster.h) * raster.w * raster.channels) {
    throw InvalidArgument("write_png: pixel buffer does not match the raster size");
  }
  png_image image;
  std::memset(&image, 0, sizeof(image));
  image.version = PNG_IMAGE_VERSION;
  image.width = static_cast<png_uint_32>(raster.w);
  image.height = static_cast<png_uint_32>(raster.h);
  image.format = raster.channels == 1 ? PNG_FORMAT_GRAY : PNG_FORMAT_RGB;
  if (!png_image_write_to_file(&image, path.c_str(), 0, raster.pixels.data(), 0, nullptr)) {
    throw Error(path + ": " + image.message);
  }
}

Tensor raster_to_image(const Raster& rgb) {
  if (rgb.channels != 3) throw InvalidArgument("raster_to_image: expected an RGB raster");
  Tensor t(Dims{1, 3, rgb.h, rgb.w});
  for (int c = 0; c < 3; ++c) {
    Real* dst = t.plane(0, c);
    for (std::size_t i = 0; i < std::size_t(rgb.h) * rgb.w; ++i) {
      dst[i] = Real(rgb.pixels[i * 3 + c]) / Real(255);
    }
  }
  return t;
}

Raster image_to_raster(const Tensor& image) {
  if (image.c() != 3) throw InvalidArgument("image_to_raster: expected 3 channels");
  Raster r;
  r.h = image.h();
  r.w = image.w();
  r.channels = 3;
  r.pixels.resize(std::size_t(r.h) * r.w * 3);
  for (int c = 0; c < 3; ++c) {
    const Real* src = image.plane(0, c);
    for (std::size_t i = 0; i < std::size_t(r.h) * r.w; ++i) {
      const double v = std::clamp(double(src[i]), 0.0, 1.0);
      r.pixels[i * 3 + c] = static_cast<std::uint8_t>(std::lround(v * 255.0));
    }
  }
  return r;
}

}  // namespace lpsnet
