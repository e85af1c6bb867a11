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

#include <filesystem>
#include <random>

#include <gtest/gtest.h>

#include "lpsnet/error.h"
#include "lpsnet/evaluation.h"
#include "lpsnet/image_io.h"

namespace lpsnet {
namespace {

namespace fs = std::filesystem;

TEST(SynthShapesTest, Deterministic) {
  auto a = synth_shapes(100, 4, 96, 128, 42);
  auto b = synth_shapes(100, 4, 96, 128, 42);
  auto c = synth_shapes(100, 4, 96, 128, 43);
  ASSERT_EQ(a.train->size(), 80u);
  ASSERT_EQ(a.val->size(), 20u);
  for (std::size_t i : {0u, 17u, 79u}) {
    const SegSample x = a.train->get(i), y = b.train->get(i);
    EXPECT_EQ(x.image, y.image);
    EXPECT_EQ(x.label.data, y.label.data);
    EXPECT_FALSE(x.image == c.train->get(i).image);
  }
  // Random access order does not matter.
  const SegSample late = a.val->get(19);
  a.val->get(3);
  EXPECT_EQ(a.val->get(19).image, late.image);
  EXPECT_EQ(a.val->sample_name(0), "synth[80]");
}

TEST(SynthShapesTest, LabelsAndHistogram) {
  for (int k : {2, 4, 8}) {
    auto d = synth_shapes(100, k, 64, 96, 7);
    std::vector<std::int64_t> hist(k, 0);
    std::int64_t total = 0;
    for (const auto* part : {d.train.get(), d.val.get()}) {
      for (std::size_t i = 0; i < part->size(); ++i) {
        const SegSample s = part->get(i);
        ASSERT_EQ(s.image.dims(), (Dims{1, 3, 64, 96}));
        ASSERT_EQ(s.label.h, 64);
        ASSERT_EQ(s.label.w, 96);
        for (float v : s.image.values()) ASSERT_TRUE(v >= 0.f && v <= 1.f);
        for (auto l : s.label.data) {
          ASSERT_TRUE(l < k || l == kIgnoreLabel) << int(l);
          if (l < k) {
            ++hist[l];
            ++total;
          }
        }
      }
    }
    for (int c = 0; c < k; ++c) {
      EXPECT_GE(double(hist[c]) / double(total), 0.01) << "K=" << k << " class " << c;
    }
  }
}

TEST(SynthShapesTest, RejectsBadArguments) {
  EXPECT_THROW(synth_shapes(10, 1, 64, 64, 0), InvalidArgument);
  EXPECT_THROW(synth_shapes(10, 9, 64, 64, 0), InvalidArgument);
  EXPECT_THROW(synth_shapes(10, 4, 63, 64, 0), InvalidArgument);
  EXPECT_THROW(synth_shapes(0, 4, 64, 64, 0), InvalidArgument);
}

class DirectoryDatasetTest : public ::testing::Test {
 protected:
  void SetUp() override {
    root_ = fs::temp_directory_path() /
            ("lpsnet_dir_test_" + std::to_string(::testing::UnitTest::GetInstance()->random_seed()) +
             "_" + ::testing::UnitTest::GetInstance()->current_test_info()->name());
    fs::remove_all(root_);
    fs::create_directories(root_ / "images" / "val");
    fs::create_directories(root_ / "labels" / "val");
  }
  void TearDown() override { fs::remove_all(root_); }

  void write_pair(const std::string& stem, int h, int w, int label_h, int label_w,
                  std::uint8_t fill = 1) {
    Raster img{h, w, 3, std::vector<std::uint8_t>(std::size_t(h) * w * 3, 128)};
    Raster lbl{label_h, label_w, 1, std::vector<std::uint8_t>(std::size_t(label_h) * label_w, fill)};
    // A band of ignore pixels in the top rows.
    for (int x = 0; x < label_w; ++x) lbl.pixels[x] = kIgnoreLabel;
    write_png(img, (root_ / "images" / "val" / (stem + ".png")).string());
    write_png(lbl, (root_ / "labels" / "val" / (stem + ".png")).string());
  }

  fs::path root_;
};

TEST_F(DirectoryDatasetTest, LoadsPairs) {
  write_pair("a", 64, 80, 64, 80, 1);
  write_pair("b", 64, 80, 64, 80, 0);
  auto d = load_directory_dataset(root_.string(), "val");
  ASSERT_EQ(d->size(), 2u);
  const SegSample s = d->get(0);
  EXPECT_EQ(s.image.dims(), (Dims{1, 3, 64, 80}));
  EXPECT_NEAR(s.image.at(0, 2, 10, 10), 128.0 / 255.0, 1e-6);
  EXPECT_EQ(s.label.at(0, 0, 5), kIgnoreLabel);
  EXPECT_EQ(s.label.at(0, 5, 5), 1);
}

TEST_F(DirectoryDatasetTest, SizeMismatchNamesFile) {
  write_pair("a", 64, 80, 64, 72);
  try {
    load_directory_dataset(root_.string(), "val");
    FAIL() << "expected an error";
  } catch (const Error& e) {
    EXPECT_NE(std::string(e.what()).find("a.png"), std::string::npos) << e.what();
  }
}

TEST_F(DirectoryDatasetTest, MissingPairNamesFile) {
  write_pair("a", 64, 64, 64, 64);
  fs::remove(root_ / "labels" / "val" / "a.png");
  try {
    load_directory_dataset(root_.string(), "val");
    FAIL() << "expected an error";
  } catch (const Error& e) {
    EXPECT_NE(std::string(e.what()).find("a.png"), std::string::npos) << e.what();
  }
  EXPECT_THROW(load_directory_dataset(root_.string(), "train"), Error);
}

TEST_F(DirectoryDatasetTest, IgnorePixelsNeverCounted) {
  write_pair("a", 64, 64, 64, 64, 1);
  write_pair("b", 64, 64, 64, 64, 2);
  auto d = load_directory_dataset(root_.string(), "val");
  auto net = NetworkInstance::build(initial_spec(), BlockKind::kConv3x3, InteractionKind::kNone,
                                    19, 0);
  const MiouResult r = evaluate_miou(net, *d);
  EXPECT_EQ(r.confusion.total(), 2 * 63 * 64);
  TrainConfig cfg;
  cfg.total_iters = 2;
  cfg.batch_size = 2;
  cfg.crop_h = cfg.crop_w = 64;
  EXPECT_NO_THROW(train(net, *d, cfg));
}

}  // namespace
}  // namespace lpsnet
