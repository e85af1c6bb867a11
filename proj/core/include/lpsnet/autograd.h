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

#include <functional>
#include <memory>
#include <vector>

#include "lpsnet/config.h"
#include "lpsnet/tensor.h"

namespace lpsnet::inline LPSNET_ABI_NAMESPACE {

// A recorded value on the autodiff tape. Results of ops keep their inputs
// alive until the graph is released; leaves are parameters or inputs.
struct Node {
  Tensor value;
  Tensor grad;  // allocated on first use
  bool requires_grad = false;
  std::vector<std::shared_ptr<Node>> inputs;
  std::function<void(Node&)> backward;  // pushes this->grad into inputs' grads

  Tensor& ensure_grad();
};

class Var {
 public:
  Var() = default;
  explicit Var(Tensor value, bool requires_grad = false);

  bool defined() const { return static_cast<bool>(node_); }
  const Tensor& value() const { return node_->value; }
  Tensor& mutable_value() { return node_->value; }
  const Dims& dims() const { return node_->value.dims(); }
  bool requires_grad() const { return node_ && node_->requires_grad; }

  // Gradient buffer, zero-filled the first time it is requested.
  Tensor& grad() { return node_->ensure_grad(); }
  bool has_grad() const { return node_ && !node_->grad.empty(); }
  void zero_grad();

  const std::shared_ptr<Node>& node() const { return node_; }

 private:
  std::shared_ptr<Node> node_;
};

bool grad_enabled();

// Disables tape recording on this thread for the guard's lifetime.
class NoGradGuard {
 public:
  NoGradGuard();
  ~NoGradGuard();
  NoGradGuard(const NoGradGuard&) = delete;
  NoGradGuard& operator=(const NoGradGuard&) = delete;

 private:
  bool previous_;
};

// Wraps an op result. The backward closure is only kept when recording is on
// and some input requires a gradient.
Var make_result(Tensor value, std::vector<Var> inputs, std::function<void(Node&)> backward);

// Seeds d(root)/d(root) = 1 (root must hold one element) and back-propagates
// through every recorded node reachable from root.
void backward(const Var& root);

}  // namespace lpsnet
