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
#include <random>
#include <string>
#include <utility>
#include <vector>

#include "lpsnet/config.h"
#include "lpsnet/autograd.h"
#include "lpsnet/ops.h"

namespace lpsnet::inline LPSNET_ABI_NAMESPACE {

// Every trainable tensor and running statistic of a network, in build order.
struct ParameterSet {
  std::vector<std::pair<std::string, Var>> params;
  std::vector<std::pair<std::string, std::shared_ptr<Tensor>>> buffers;

  std::size_t num_parameters() const;
  void zero_grad();
  Var* find_param(const std::string& name);
  std::shared_ptr<Tensor> find_buffer(const std::string& name);
};

struct ConvUnit {
  Var weight;
  Var bias;  // undefined unless the layer was built with a bias
  int stride = 1;
  int groups = 1;

  Var forward(const Var& x) const { return ops::conv2d(x, weight, bias, stride, groups); }
  int in_channels() const { return weight.dims().c * groups; }
  int out_channels() const { return weight.dims().n; }
};

struct NormUnit {
  Var gamma;
  Var beta;
  std::shared_ptr<Tensor> running_mean;
  std::shared_ptr<Tensor> running_var;

  Var forward(const Var& x, bool training) const;
};

// conv -> norm, optionally followed by ReLU.
struct ConvNorm {
  ConvUnit conv;
  NormUnit norm;
  bool relu = true;

  Var forward(const Var& x, bool training) const;
};

// Creates named, initialized parameters. Conv weights are drawn from
// N(0, 2 / fan_in); norm scale 1, shift 0, running mean 0, running var 1.
class ParamBuilder {
 public:
  ParamBuilder(std::uint64_t seed, ParameterSet& out);

  ConvUnit conv(const std::string& name, int cin, int cout, int k, int stride = 1,
                int groups = 1, bool bias = false);
  NormUnit norm(const std::string& name, int channels);
  // Registers "<prefix>/<conv_name>/weight" and "<prefix>/<norm_name>/{weight,bias,mean,var}".
  ConvNorm conv_norm(const std::string& prefix, const std::string& conv_name,
                     const std::string& norm_name, int cin, int cout, int k, int stride = 1,
                     int groups = 1, bool relu = true);

 private:
  std::mt19937_64 rng_;
  ParameterSet& out_;
};

}  // namespace lpsnet
