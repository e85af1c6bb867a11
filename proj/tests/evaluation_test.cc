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

#include "lpsnet/evaluation.h"

#include <cmath>
#include <numeric>
#include <random>

#include <gtest/gtest.h>

#include "lpsnet/dataset.h"
#include "lpsnet/error.h"

namespace lpsnet {
namespace {

TEST(PolyLrTest, SpotValues) {
  TrainConfig cfg;
  cfg.total_iters = 1000;
  EXPECT_EQ(poly_lr(0, cfg), 0.01);
  EXPECT_NEAR(poly_lr(500, cfg), 0.0053589, 1e-7);
  EXPECT_NEAR(poly_lr(500, cfg) / (0.01 * std::pow(0.5, 0.9)), 1.0, 1e-12);
  EXPECT_THROW(poly_lr(-1, cfg), InvalidArgument);
  EXPECT_THROW(poly_lr(1000, cfg), InvalidArgument);
}

TEST(PolyLrTest, LinearWithUnitPower) {
  TrainConfig cfg;
  cfg.total_iters = 8;
  cfg.power = 1.0;
  for (int i = 0; i < 8; ++i) EXPECT_DOUBLE_EQ(poly_lr(i, cfg), 0.01 * (8 - i) / 8.0);
}

TEST(PolyLrTest, StrictlyDecreasing) {
  TrainConfig cfg;
  cfg.total_iters = 500;
  for (double p : {0.3, 0.9, 2.0}) {
    cfg.power = p;
    for (int i = 1; i < 500; ++i) ASSERT_LT(poly_lr(i, cfg), poly_lr(i - 1, cfg)) << p << " " << i;
  }
}

TEST(ConfusionTest, HandCountedTwoClass) {
  ConfusionMatrix m(2);
  m.add(0, 0, 8);
  m.add(0, 1, 2);
  m.add(1, 0, 1);
  m.add(1, 1, 9);
  const auto iou = m.per_class_iou();
  EXPECT_DOUBLE_EQ(iou[0], 8.0 / 11.0);
  EXPECT_DOUBLE_EQ(iou[1], 9.0 / 12.0);
  EXPECT_NEAR(m.mean_iou(), 0.7386, 1e-4);
  EXPECT_EQ(m.total(), 20);
}

TEST(ConfusionTest, ConstantPredictor) {
  LabelMap truth(1, 2, 4), pred(1, 2, 4, 0);
  for (int x = 0; x < 4; ++x) truth.at(0, 1, x) = 1;
  ConfusionMatrix m(2);
  m.accumulate(truth, pred);
  EXPECT_DOUBLE_EQ(m.mean_iou(), 0.25);
}

TEST(ConfusionTest, PerfectPredictorAndIgnore) {
  std::mt19937 rng(1);
  LabelMap truth(2, 8, 8);
  std::uniform_int_distribution<int> cls(0, 4);
  for (auto& v : truth.data) v = std::uint8_t(cls(rng));
  LabelMap pred = truth;
  truth.data[3] = kIgnoreLabel;
  pred.data[3] = 2;
  ConfusionMatrix m(5);
  m.accumulate(truth, pred);
  EXPECT_EQ(m.mean_iou(), 1.0);
  EXPECT_EQ(m.total(), 127);
  pred.data[5] = std::uint8_t((pred.data[5] + 1) % 5);
  ConfusionMatrix m2(5);
  m2.accumulate(truth, pred);
  EXPECT_LT(m2.mean_iou(), 1.0);
}

TEST(ConfusionTest, AbsentClassesExcluded) {
  ConfusionMatrix m(4);
  m.add(1, 1, 5);
  const auto iou = m.per_class_iou();
  EXPECT_TRUE(std::isnan(iou[0]));
  EXPECT_EQ(iou[1], 1.0);
  EXPECT_EQ(m.mean_iou(), 1.0);
  EXPECT_THROW(ConfusionMatrix(3).mean_iou(), InvalidArgument);
}

TEST(ConfusionTest, RejectsOutOfRange) {
  LabelMap truth(1, 1, 2), pred(1, 1, 2);
  truth.data[1] = 3;
  ConfusionMatrix m(3);
  EXPECT_THROW(m.accumulate(truth, pred), InvalidArgument);
}

TEST(ConfusionTest, OrderIndependentAndMergeable) {
  std::mt19937 rng(2);
  std::uniform_int_distribution<int> cls(0, 3);
  std::vector<std::pair<LabelMap, LabelMap>> samples;
  for (int i = 0; i < 12; ++i) {
    LabelMap t(1, 5, 7), p(1, 5, 7);
    for (auto& v : t.data) v = std::uint8_t(cls(rng));
    for (auto& v : p.data) v = std::uint8_t(cls(rng));
    samples.emplace_back(t, p);
  }
  ConfusionMatrix forward(4), shuffled(4), left(4), right(4);
  for (const auto& [t, p] : samples) forward.accumulate(t, p);
  auto order = samples;
  std::shuffle(order.begin(), order.end(), rng);
  for (const auto& [t, p] : order) shuffled.accumulate(t, p);
  for (std::size_t i = 0; i < samples.size(); ++i) {
    (i % 3 ? left : right).accumulate(samples[i].first, samples[i].second);
  }
  EXPECT_EQ(forward, shuffled);
  ConfusionMatrix merged = right;
  merged.merge(left);
  EXPECT_EQ(forward, merged);
  const double miou = forward.mean_iou();
  EXPECT_GE(miou, 0.0);
  EXPECT_LE(miou, 1.0);
}

// Image channel 0 carries the label id of its block, so any geometric
// mismatch between image and label shows up as a wrong tag.
SegSample tagged_sample(int h, int w, int block) {
  SegSample s{Tensor(Dims{1, 3, h, w}), LabelMap(1, h, w)};
  const int blocks_x = (w + block - 1) / block;
  for (int y = 0; y < h; ++y) {
    for (int x = 0; x < w; ++x) {
      const int id = (y / block) * blocks_x + x / block;
      s.label.at(0, y, x) = std::uint8_t(id);
      s.image.at(0, 0, y, x) = Real(id) / 256;
      s.image.at(0, 1, y, x) = Real(x) / w;
    }
  }
  return s;
}

bool uniform_around(const LabelMap& l, int y, int x, int r) {
  for (int dy = -r; dy <= r; ++dy) {
    for (int dx = -r; dx <= r; ++dx) {
      const int yy = y + dy, xx = x + dx;
      if (yy < 0 || xx < 0 || yy >= l.h || xx >= l.w) return false;
      if (l.at(0, yy, xx) != l.at(0, y, x)) return false;
    }
  }
  return true;
}

TEST(AugmentTest, LabelsFollowImageGeometry) {
  const SegSample src = tagged_sample(96, 128, 16);
  TrainConfig cfg;
  cfg.crop_h = 64;
  cfg.crop_w = 80;
  cfg.color_jitter = false;
  std::mt19937_64 rng(5);
  int checked = 0, flipped = 0;
  for (int trial = 0; trial < 40; ++trial) {
    const SegSample a = augment(src, cfg, rng);
    ASSERT_EQ(a.image.dims(), (Dims{1, 3, 64, 80}));
    ASSERT_EQ(a.label.h, 64);
    ASSERT_EQ(a.label.w, 80);
    for (int y = 0; y < 64; ++y) {
      for (int x = 0; x < 80; ++x) {
        const auto l = a.label.at(0, y, x);
        if (l == kIgnoreLabel || !uniform_around(a.label, y, x, 2)) continue;
        ASSERT_NEAR(a.image.at(0, 0, y, x), Real(l) / 256, 1e-5) << trial << " " << y << "," << x;
        ++checked;
      }
    }
    // The x ramp in channel 1 reveals the flip.
    if (a.image.at(0, 1, 32, 0) > a.image.at(0, 1, 32, 79)) ++flipped;
  }
  EXPECT_GT(checked, 40 * 64 * 80 / 4);
  EXPECT_GT(flipped, 5);
  EXPECT_LT(flipped, 35);
}

TEST(AugmentTest, PaddingIsIgnoredAndMeanFilled) {
  const SegSample src = tagged_sample(40, 40, 8);
  TrainConfig cfg;
  cfg.crop_h = 64;
  cfg.crop_w = 64;
  cfg.scale_min = cfg.scale_max = 1.0;
  cfg.hflip = false;
  cfg.color_jitter = false;
  std::mt19937_64 rng(1);
  const SegSample a = augment(src, cfg, rng);
  double mean = 0;
  for (int i = 0; i < 40 * 40; ++i) mean += src.image.plane(0, 0)[i];
  mean /= 1600;
  for (int y = 0; y < 64; ++y) {
    for (int x = 0; x < 64; ++x) {
      if (y < 40 && x < 40) {
        EXPECT_EQ(a.label.at(0, y, x), src.label.at(0, y, x));
        EXPECT_EQ(a.image.at(0, 0, y, x), src.image.at(0, 0, y, x));
      } else {
        EXPECT_EQ(a.label.at(0, y, x), kIgnoreLabel);
        EXPECT_NEAR(a.image.at(0, 0, y, x), mean, 1e-6);
      }
    }
  }
}

NetworkSpec tiny_spec() { return initial_spec(); }

TrainConfig tiny_config(int iters) {
  TrainConfig cfg;
  cfg.total_iters = iters;
  cfg.batch_size = 4;
  cfg.crop_h = cfg.crop_w = 64;
  cfg.seed = 11;
  return cfg;
}

TEST(TrainTest, ZeroIterationsIsNoOp) {
  auto data = synth_shapes(10, 3, 64, 64, 1);
  auto net = NetworkInstance::build(tiny_spec(), BlockKind::kConv3x3, InteractionKind::kNone, 3, 2);
  std::vector<Tensor> before;
  for (auto& [n, v] : net.parameters().params) before.push_back(v.value());
  const TrainLog log = train(net, *data.train, tiny_config(0));
  EXPECT_TRUE(log.loss.empty());
  for (std::size_t i = 0; i < before.size(); ++i) {
    EXPECT_EQ(net.parameters().params[i].second.value(), before[i]);
  }
}

TEST(TrainTest, SameSeedSameHistory) {
  auto data = synth_shapes(10, 3, 64, 64, 1);
  auto run = [&] {
    auto net =
        NetworkInstance::build(tiny_spec(), BlockKind::kConv3x3, InteractionKind::kNone, 3, 2);
    return train(net, *data.train, tiny_config(15)).loss;
  };
  const auto a = run(), b = run();
  ASSERT_EQ(a.size(), 15u);
  EXPECT_EQ(a, b);
}

TEST(TrainTest, LossDecreasesOnShapes) {
  auto data = synth_shapes(40, 3, 64, 64, 3);
  auto net = NetworkInstance::build(tiny_spec(), BlockKind::kConv3x3, InteractionKind::kNone, 3, 2);
  const TrainLog log = train(net, *data.train, tiny_config(200));
  ASSERT_EQ(log.loss.size(), 200u);
  ASSERT_EQ(log.lr.size(), 200u);
  const double first = std::accumulate(log.loss.begin(), log.loss.begin() + 20, 0.0) / 20;
  const double last = std::accumulate(log.loss.end() - 20, log.loss.end(), 0.0) / 20;
  EXPECT_LT(last, first);
  const MiouResult r = evaluate_miou(net, *data.val);
  EXPECT_GE(r.miou, 0.0);
  EXPECT_LE(r.miou, 1.0);
  EXPECT_EQ(r.per_class.size(), 3u);
}

class BadLabelDataset : public Dataset {
 public:
  std::size_t size() const override { return 2; }
  SegSample get(std::size_t i) const override {
    SegSample s{Tensor(Dims{1, 3, 64, 64}, Real(0.5)), LabelMap(1, 64, 64, 0)};
    if (i == 1) s.label.data[100] = 7;
    return s;
  }
  std::string sample_name(std::size_t i) const override { return "frame_" + std::to_string(i); }
};

TEST(TrainTest, BadLabelNamesSample) {
  auto net = NetworkInstance::build(tiny_spec(), BlockKind::kConv3x3, InteractionKind::kNone, 3, 2);
  try {
    train(net, BadLabelDataset(), tiny_config(5));
    FAIL() << "expected an error";
  } catch (const Error& e) {
    EXPECT_NE(std::string(e.what()).find("frame_1"), std::string::npos) << e.what();
  }
  EXPECT_THROW(evaluate_miou(net, BadLabelDataset()), Error);
}

TEST(TrainTest, RejectsBadConfig) {
  auto data = synth_shapes(10, 3, 64, 64, 1);
  auto net = NetworkInstance::build(tiny_spec(), BlockKind::kConv3x3, InteractionKind::kNone, 3, 2);
  TrainConfig cfg = tiny_config(5);
  cfg.scale_min = 2.5;
  EXPECT_THROW(train(net, *data.train, cfg), InvalidArgument);
  cfg = tiny_config(5);
  cfg.hard_pixel_mining = true;
  EXPECT_THROW(train(net, *data.train, cfg), InvalidArgument);
  auto other = NetworkInstance::build(tiny_spec(), BlockKind::kConv3x3, InteractionKind::kNone,
                                      2, 2);
  EXPECT_THROW(train(other, *data.train, tiny_config(5)), Error);
}

TEST(EvaluateTest, EmptyDatasetThrows) {
  auto data = synth_shapes(4, 3, 64, 64, 1);  // 3 train, 1 val
  auto net = NetworkInstance::build(tiny_spec(), BlockKind::kConv3x3, InteractionKind::kNone, 3, 2);
  EXPECT_NO_THROW(evaluate_miou(net, *data.val));
  auto empty = synth_shapes(1, 3, 64, 64, 1);  // 0 train, 1 val
  EXPECT_EQ(empty.train->size(), 0u);
  EXPECT_THROW(evaluate_miou(net, *empty.train), InvalidArgument);
}

}  // namespace
}  // namespace lpsnet
