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

#include "lpsnet/checkpoint.h"

#include <filesystem>
#include <fstream>
#include <random>

#include <gtest/gtest.h>

#include "lpsnet/error.h"

namespace lpsnet {
namespace {

namespace fs = std::filesystem;

TEST(CheckpointTest, RoundTripPreservesOutputs) {
  auto net = NetworkInstance::build(preset("S"), BlockKind::kConv3x3,
                                    InteractionKind::kBilateralA, 4, 9);
  // Perturb running statistics so buffers matter.
  for (auto& [name, t] : net.parameters().buffers) {
    for (auto& v : t->values()) v += Real(0.25);
  }
  const auto path = fs::temp_directory_path() / "lpsnet_ckpt_test.bin";
  save_checkpoint(net, path.string());
  const NetworkInstance back = load_checkpoint(path.string());
  fs::remove(path);
  EXPECT_EQ(back.spec(), net.spec());
  EXPECT_EQ(back.block_kind(), net.block_kind());
  EXPECT_EQ(back.interaction_kind(), net.interaction_kind());
  EXPECT_EQ(back.num_classes(), 4);
  std::mt19937 rng(1);
  Tensor img(Dims{1, 3, 64, 96});
  std::uniform_real_distribution<float> u(0.f, 1.f);
  for (auto& v : img.values()) v = u(rng);
  EXPECT_EQ(forward(back, img), forward(net, img));
}

TEST(CheckpointTest, RejectsGarbage) {
  const auto path = fs::temp_directory_path() / "lpsnet_ckpt_garbage.bin";
  {
    std::ofstream out(path, std::ios::binary);
    out << "not a checkpoint";
  }
  EXPECT_THROW(load_checkpoint(path.string()), Error);
  fs::remove(path);
  EXPECT_THROW(load_checkpoint(path.string()), Error);
}

}  // namespace
}  // namespace lpsnet
