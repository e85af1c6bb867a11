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

#include "lpsnet/modules.h"

#include <cmath>

#include "lpsnet/error.h"

namespace lpsnet::inline LPSNET_ABI_NAMESPACE {

std::size_t ParameterSet::num_parameters() const {
  std::size_t n = 0;
  for (const auto& [name, v] : params) n += v.value().size();
  return n;
}

void ParameterSet::zero_grad() {
  for (auto& [name, v] : params) v.zero_grad();
}

Var* ParameterSet::find_param(const std::string& name) {
  for (auto& [n, v] : params) {
    if (n == name) return &v;
  }
  return nullptr;
}

std::shared_ptr<Tensor> ParameterSet::find_buffer(const std::string& name) {
  for (auto& [n, t] : buffers) {
    if (n == name) return t;
  }
  return nullptr;
}

Var NormUnit::forward(const Var& x, bool training) const {
  return ops::batch_norm(x, gamma, beta, {running_mean.get(), running_var.get()}, training);
}

Var ConvNorm::forward(const Var& x, bool training) const {
  Var y = norm.forward(conv.forward(x), training);
  return relu ? ops::relu(y) : y;
}

ParamBuilder::ParamBuilder(std::uint64_t seed, ParameterSet& out) : rng_(seed), out_(out) {}

ConvUnit ParamBuilder::conv(const std::string& name, int cin, int cout, int k, int stride,
                            int groups, bool bias) {
  if (cin < 1 || cout < 1 || groups < 1 || cin % groups || cout % groups) {
    throw InvalidArgument("conv '" + name + "': bad channels " + std::to_string(cin) + "->" +
                          std::to_string(cout) + " groups=" + std::to_string(groups));
  }
  const int cin_g = cin / groups;
  Tensor w(Dims{cout, cin_g, k, k});
  std::normal_distribution<double> dist(0.0, std::sqrt(2.0 / double(cin_g * k * k)));
  for (auto& v : w.values()) v = Real(dist(rng_));
  ConvUnit unit;
  unit.weight = Var(std::move(w), true);
  unit.stride = stride;
  unit.groups = groups;
  out_.params.emplace_back(name + "/weight", unit.weight);
  if (bias) {
    unit.bias = Var(Tensor(Dims{cout, 1, 1, 1}, Real(0)), true);
    out_.params.emplace_back(name + "/bias", unit.bias);
  }
  return unit;
}

NormUnit ParamBuilder::norm(const std::string& name, int channels) {
  NormUnit unit;
  unit.gamma = Var(Tensor(Dims{channels, 1, 1, 1}, Real(1)), true);
  unit.beta = Var(Tensor(Dims{channels, 1, 1, 1}, Real(0)), true);
  unit.running_mean = std::make_shared<Tensor>(Dims{channels, 1, 1, 1}, Real(0));
  unit.running_var = std::make_shared<Tensor>(Dims{channels, 1, 1, 1}, Real(1));
  out_.params.emplace_back(name + "/weight", unit.gamma);
  out_.params.emplace_back(name + "/bias", unit.beta);
  out_.buffers.emplace_back(name + "/mean", unit.running_mean);
  out_.buffers.emplace_back(name + "/var", unit.running_var);
  return unit;
}

ConvNorm ParamBuilder::conv_norm(const std::string& prefix, const std::string& conv_name,
                                 const std::string& norm_name, int cin, int cout, int k,
                                 int stride, int groups, bool relu) {
  ConvNorm cn;
  cn.conv = conv(prefix + "/" + conv_name, cin, cout, k, stride, groups);
  cn.norm = norm(prefix + "/" + norm_name, cout);
  cn.relu = relu;
  return cn;
}

}  // namespace lpsnet
