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
#include <functional>
#include <random>
#include <string>
#include <vector>

#include "lpsnet/config.h"
#include "lpsnet/dataset.h"
#include "lpsnet/network.h"

namespace lpsnet::inline LPSNET_ABI_NAMESPACE {

// K x K pixel counts, rows = ground truth, columns = prediction.
class ConfusionMatrix {
 public:
  explicit ConfusionMatrix(int num_classes);

  int num_classes() const { return k_; }
  std::int64_t at(int truth, int pred) const { return counts_[std::size_t(truth) * k_ + pred]; }
  std::int64_t total() const;

  void add(int truth, int pred, std::int64_t count = 1);
  // Skips pixels whose truth is kIgnoreLabel. Throws on other ids >= K.
  void accumulate(const LabelMap& truth, const LabelMap& pred);
  void merge(const ConfusionMatrix& other);

  // TP / (TP + FP + FN); NaN when the class never occurs in truth or prediction.
  std::vector<double> per_class_iou() const;
  // Mean over classes with a defined IoU; throws when none is defined.
  double mean_iou() const;

  friend bool operator==(const ConfusionMatrix&, const ConfusionMatrix&) = default;

 private:
  int k_;
  std::vector<std::int64_t> counts_;
};

struct TrainConfig {
  double base_lr = 0.01;
  double momentum = 0.9;
  double weight_decay = 0.0005;
  double power = 0.9;
  int total_iters = 1000;
  int batch_size = 8;
  int crop_h = 192;
  int crop_w = 192;
  double scale_min = 0.5;
  double scale_max = 2.0;
  bool hflip = true;
  bool color_jitter = true;
  double jitter_strength = 0.2;  // brightness / contrast / saturation factor range
  std::uint64_t seed = 0;
  // Strategies that only matter at full scale; accepted for config parity,
  // rejected when enabled.
  bool imagenet_pretrain = false;
  bool hard_pixel_mining = false;

  void validate() const;
};

// base_lr * (1 - iter / total_iters)^power for 0 <= iter < total_iters.
double poly_lr(int iter, const TrainConfig& cfg);

struct TrainLog {
  std::vector<double> loss;
  std::vector<double> lr;
};

// Called after each iteration with (iter, lr, loss).
using TrainCallback = std::function<void(int, double, double)>;

// One augmented crop. Exposed for tests; the training loop draws from it.
SegSample augment(const SegSample& sample, const TrainConfig& cfg, std::mt19937_64& rng);

// SGD with momentum and weight decay on pixelwise cross-entropy under the
// poly schedule. Throws when a label >= num_classes (other than 255) is met,
// naming the sample.
TrainLog train(NetworkInstance& net, const Dataset& data, const TrainConfig& cfg,
               const TrainCallback& callback = {});

// iter,lr,loss rows.
void write_loss_csv(const TrainLog& log, const std::string& path);

struct MiouResult {
  double miou = 0.0;
  std::vector<double> per_class;  // NaN for classes excluded from the mean
  ConfusionMatrix confusion{2};
};

MiouResult evaluate_miou(const NetworkInstance& net, const Dataset& data);

}  // namespace lpsnet
