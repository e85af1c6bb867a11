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

#include <algorithm>
#include <cmath>
#include <fstream>
#include <limits>

#include "lpsnet/csv.h"
#include "lpsnet/error.h"
#include "lpsnet/ops.h"

namespace lpsnet::inline LPSNET_ABI_NAMESPACE {

ConfusionMatrix::ConfusionMatrix(int num_classes)
    : k_(num_classes), counts_(std::size_t(std::max(num_classes, 0)) * std::max(num_classes, 0)) {
  if (num_classes < 1) throw InvalidArgument("ConfusionMatrix: need at least one class");
}

std::int64_t ConfusionMatrix::total() const {
  std::int64_t t = 0;
  for (auto c : counts_) t += c;
  return t;
}

void ConfusionMatrix::add(int truth, int pred, std::int64_t count) {
  if (truth < 0 || truth >= k_ || pred < 0 || pred >= k_) {
    throw InvalidArgument("ConfusionMatrix: class pair (" + std::to_string(truth) + ", " +
                          std::to_string(pred) + ") outside [0, " + std::to_string(k_) + ")");
  }
  counts_[std::size_t(truth) * k_ + pred] += count;
}

void ConfusionMatrix::accumulate(const LabelMap& truth, const LabelMap& pred) {
  if (truth.n != pred.n || truth.h != pred.h || truth.w != pred.w) {
    throw ShapeError("ConfusionMatrix: prediction and label sizes differ");
  }
  for (std::size_t i = 0; i < truth.data.size(); ++i) {
    const int t = truth.data[i];
    if (t == kIgnoreLabel) continue;
    if (t >= k_) {
      throw InvalidArgument("label " + std::to_string(t) + " >= num_classes " +
                            std::to_string(k_));
    }
    ++counts_[std::size_t(t) * k_ + pred.data[i]];
  }
}

void ConfusionMatrix::merge(const ConfusionMatrix& other) {
  if (other.k_ != k_) throw InvalidArgument("ConfusionMatrix: merging different class counts");
  for (std::size_t i = 0; i < counts_.size(); ++i) counts_[i] += other.counts_[i];
}

std::vector<double> ConfusionMatrix::per_class_iou() const {
  std::vector<double> iou(k_, std::numeric_limits<double>::quiet_NaN());
  for (int c = 0; c < k_; ++c) {
    std::int64_t row = 0, col = 0;
    for (int j = 0; j < k_; ++j) {
      row += at(c, j);
      col += at(j, c);
    }
    const std::int64_t tp = at(c, c);
    const std::int64_t denom = row + col - tp;  // TP + FN + FP
    if (denom > 0) iou[c] = double(tp) / double(denom);
  }
  return iou;
}

double ConfusionMatrix::mean_iou() const {
  double sum = 0.0;
  int n = 0;
  for (double v : per_class_iou()) {
    if (std::isnan(v)) continue;
    sum += v;
    ++n;
  }
  if (n == 0) throw InvalidArgument("mean_iou: no class present in labels or predictions");
  return sum / n;
}

void TrainConfig::validate() const {
  if (total_iters < 1) throw InvalidArgument("train config: total_iters must be >= 1");
  if (batch_size < 1) throw InvalidArgument("train config: batch_size must be >= 1");
  if (crop_h < kMinInputSize || crop_w < kMinInputSize) {
    throw InvalidArgument("train config: crop must be at least 64x64");
  }
  if (!(scale_min > 0.0) || scale_min > scale_max) {
    throw InvalidArgument("train config: need 0 < scale_min <= scale_max");
  }
  if (!(base_lr > 0.0)) throw InvalidArgument("train config: base_lr must be positive");
  if (momentum < 0.0 || momentum >= 1.0) {
    throw InvalidArgument("train config: momentum must be in [0, 1)");
  }
  if (weight_decay < 0.0) throw InvalidArgument("train config: weight_decay must be >= 0");
  if (power < 0.0) throw InvalidArgument("train config: power must be >= 0");
  if (jitter_strength < 0.0 || jitter_strength >= 1.0) {
    throw InvalidArgument("train config: jitter_strength must be in [0, 1)");
  }
  if (imagenet_pretrain) {
    throw InvalidArgument("train config: imagenet_pretrain is not available in this build");
  }
  if (hard_pixel_mining) {
    throw InvalidArgument("train config: hard_pixel_mining is not available in this build");
  }
}

double poly_lr(int iter, const TrainConfig& cfg) {
  if (cfg.total_iters < 1) throw InvalidArgument("poly_lr: total_iters must be >= 1");
  if (iter < 0 || iter >= cfg.total_iters) {
    throw InvalidArgument("poly_lr: iter " + std::to_string(iter) + " outside [0, " +
                          std::to_string(cfg.total_iters) + ")");
  }
  return cfg.base_lr * std::pow(1.0 - double(iter) / double(cfg.total_iters), cfg.power);
}

namespace {

LabelMap resize_nearest(const LabelMap& l, int oh, int ow) {
  LabelMap out(1, oh, ow);
  for (int y = 0; y < oh; ++y) {
    const int sy = std::min(l.h - 1, int((y + 0.5) * l.h / oh));
    for (int x = 0; x < ow; ++x) {
      const int sx = std::min(l.w - 1, int((x + 0.5) * l.w / ow));
      out.at(0, y, x) = l.at(0, sy, sx);
    }
  }
  return out;
}

void jitter_colors(Tensor& img, double strength, std::mt19937_64& rng) {
  std::uniform_real_distribution<double> f(1.0 - strength, 1.0 + strength);
  const double brightness = f(rng), contrast = f(rng), saturation = f(rng);
  const std::size_t plane = img.dims().plane();
  Real* r = img.plane(0, 0);
  Real* g = img.plane(0, 1);
  Real* b = img.plane(0, 2);
  double mean_gray = 0.0;
  for (std::size_t i = 0; i < plane; ++i) {
    r[i] *= Real(brightness);
    g[i] *= Real(brightness);
    b[i] *= Real(brightness);
    mean_gray += 0.299 * r[i] + 0.587 * g[i] + 0.114 * b[i];
  }
  mean_gray /= double(plane);
  for (std::size_t i = 0; i < plane; ++i) {
    const double gray = 0.299 * r[i] + 0.587 * g[i] + 0.114 * b[i];
    for (Real* ch : {r, g, b}) {
      double v = gray + (ch[i] - gray) * saturation;
      v = (v - mean_gray) * contrast + mean_gray;
      ch[i] = Real(std::clamp(v, 0.0, 1.0));
    }
  }
}

}  // namespace

SegSample augment(const SegSample& sample, const TrainConfig& cfg, std::mt19937_64& rng) {
  const int h = sample.image.h(), w = sample.image.w();
  std::uniform_real_distribution<double> scale_dist(cfg.scale_min, cfg.scale_max);
  const double s = cfg.scale_min == cfg.scale_max ? cfg.scale_min : scale_dist(rng);
  const int sh = std::max(1, int(std::lround(s * h)));
  const int sw = std::max(1, int(std::lround(s * w)));
  Tensor img = ops::resize_bilinear(sample.image, sh, sw);
  LabelMap lbl = (sh == h && sw == w) ? sample.label : resize_nearest(sample.label, sh, sw);
  if (cfg.color_jitter && cfg.jitter_strength > 0.0) jitter_colors(img, cfg.jitter_strength, rng);

  // Pad bottom/right to the crop size with the per-channel mean; padded labels are ignored.
  const int ph = std::max(sh, cfg.crop_h), pw = std::max(sw, cfg.crop_w);
  if (ph != sh || pw != sw) {
    Tensor padded(Dims{1, 3, ph, pw});
    for (int c = 0; c < 3; ++c) {
      const Real* src = img.plane(0, c);
      double mean = 0.0;
      for (std::size_t i = 0; i < img.dims().plane(); ++i) mean += src[i];
      mean /= double(img.dims().plane());
      Real* dst = padded.plane(0, c);
      std::fill(dst, dst + padded.dims().plane(), Real(mean));
      for (int y = 0; y < sh; ++y) std::copy(src + y * sw, src + (y + 1) * sw, dst + y * pw);
    }
    LabelMap plbl(1, ph, pw, kIgnoreLabel);
    for (int y = 0; y < sh; ++y) {
      std::copy(lbl.data.begin() + std::size_t(y) * sw, lbl.data.begin() + std::size_t(y + 1) * sw,
                plbl.data.begin() + std::size_t(y) * pw);
    }
    img = std::move(padded);
    lbl = std::move(plbl);
  }

  const int oy = std::uniform_int_distribution<int>(0, ph - cfg.crop_h)(rng);
  const int ox = std::uniform_int_distribution<int>(0, pw - cfg.crop_w)(rng);
  const bool flip = cfg.hflip && std::bernoulli_distribution(0.5)(rng);
  SegSample out{Tensor(Dims{1, 3, cfg.crop_h, cfg.crop_w}), LabelMap(1, cfg.crop_h, cfg.crop_w)};
  for (int y = 0; y < cfg.crop_h; ++y) {
    for (int x = 0; x < cfg.crop_w; ++x) {
      const int sx = ox + (flip ? cfg.crop_w - 1 - x : x);
      for (int c = 0; c < 3; ++c) out.image.at(0, c, y, x) = img.at(0, c, oy + y, sx);
      out.label.at(0, y, x) = lbl.at(0, oy + y, sx);
    }
  }
  return out;
}

namespace {

void check_labels(const LabelMap& l, int k, const std::string& name) {
  for (auto v : l.data) {
    if (v != kIgnoreLabel && v >= k) {
      throw InvalidArgument(name + ": class id " + std::to_string(v) + " >= num_classes " +
                            std::to_string(k));
    }
  }
}

}  // namespace

TrainLog train(NetworkInstance& net, const Dataset& data, const TrainConfig& cfg,
               const TrainCallback& callback) {
  TrainLog log;
  if (cfg.total_iters == 0) return log;
  cfg.validate();
  if (data.size() == 0) throw InvalidArgument("train: empty dataset");

  auto& params = net.parameters().params;
  std::vector<Tensor> velocity;
  velocity.reserve(params.size());
  for (const auto& [name, v] : params) velocity.emplace_back(v.dims());

  std::mt19937_64 rng(cfg.seed);
  std::uniform_int_distribution<std::size_t> pick(0, data.size() - 1);
  const int b = cfg.batch_size, ch = cfg.crop_h, cw = cfg.crop_w;
  const std::size_t img_plane = std::size_t(3) * ch * cw;

  for (int it = 0; it < cfg.total_iters; ++it) {
    const double lr = poly_lr(it, cfg);
    Tensor images(Dims{b, 3, ch, cw});
    LabelMap labels(b, ch, cw);
    for (int i = 0; i < b; ++i) {
      const std::size_t idx = pick(rng);
      const SegSample raw = data.get(idx);
      check_labels(raw.label, net.num_classes(), data.sample_name(idx));
      const SegSample s = augment(raw, cfg, rng);
      std::copy(s.image.values().begin(), s.image.values().end(),
                images.data() + i * img_plane);
      std::copy(s.label.data.begin(), s.label.data.end(),
                labels.data.begin() + std::size_t(i) * ch * cw);
    }

    net.parameters().zero_grad();
    double loss_value = 0.0;
    {
      Var logits = net.forward(Var(std::move(images)), true);
      Var loss = ops::cross_entropy(logits, labels);
      loss_value = double(loss.value()[0]);
      backward(loss);
    }
    if (!std::isfinite(loss_value)) {
      throw Error("train: loss became non-finite at iteration " + std::to_string(it));
    }

    const Real m = Real(cfg.momentum), wd = Real(cfg.weight_decay), step = Real(lr);
    for (std::size_t p = 0; p < params.size(); ++p) {
      Var& v = params[p].second;
      if (!v.has_grad()) continue;
      Real* w = v.mutable_value().data();
      const Real* g = v.grad().data();
      Real* vel = velocity[p].data();
      for (std::size_t i = 0; i < velocity[p].size(); ++i) {
        vel[i] = m * vel[i] + g[i] + wd * w[i];
        w[i] -= step * vel[i];
      }
    }
    log.loss.push_back(loss_value);
    log.lr.push_back(lr);
    if (callback) callback(it, lr, loss_value);
  }
  return log;
}

void write_loss_csv(const TrainLog& log, const std::string& path) {
  std::ofstream out(path);
  if (!out) throw Error("cannot write '" + path + "'");
  out << "iter,lr,loss\n";
  for (std::size_t i = 0; i < log.loss.size(); ++i) {
    out << i << ',' << format_real(log.lr[i]) << ',' << format_real(log.loss[i]) << '\n';
  }
}

MiouResult evaluate_miou(const NetworkInstance& net, const Dataset& data) {
  if (data.size() == 0) throw InvalidArgument("evaluate_miou: empty dataset");
  MiouResult r;
  r.confusion = ConfusionMatrix(net.num_classes());
  for (std::size_t i = 0; i < data.size(); ++i) {
    const SegSample s = data.get(i);
    const LabelMap pred = ops::argmax_channels(forward(net, s.image));
    try {
      r.confusion.accumulate(s.label, pred);
    } catch (const InvalidArgument& e) {
      throw InvalidArgument(data.sample_name(i) + ": " + e.what());
    }
  }
  r.per_class = r.confusion.per_class_iou();
  r.miou = r.confusion.mean_iou();
  return r;
}

}  // namespace lpsnet
