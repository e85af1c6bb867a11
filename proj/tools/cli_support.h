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
#include <optional>
#include <string>

#include "lpsnet/archspec.h"

namespace lpsnet::cli {

// Minimum input extent accepted on the command line.
inline constexpr int kMinInputSize = 64;

struct Resolution {
  int h = 0;
  int w = 0;
};

// "HxW", both sides >= kMinInputSize.
Resolution parse_resolution(const std::string& text);

// "CxHxW".
struct BlockShape {
  int c = 0;
  int h = 0;
  int w = 0;
};
BlockShape parse_block_shape(const std::string& text);

// A spec given as a preset name (S, M, L), "n0" for the initial network, or
// a path to a spec file.
NetworkSpec resolve_spec(const std::string& source);

// LPS_DEVICE must be unset or "cpu".
std::string device_from_env();

// LPS_SEED, when set, replaces every seed a command uses.
std::optional<std::uint64_t> seed_from_env();
std::uint64_t seed_or_env(std::uint64_t flag_value);

// Exclusive advisory lock serializing timing runs on one device. Blocks until
// the lock is free. The path is $LPS_LOCK_FILE or /tmp/lpsnet-<device>.lock.
class DeviceLock {
 public:
  explicit DeviceLock(const std::string& device);
  ~DeviceLock();
  DeviceLock(const DeviceLock&) = delete;
  DeviceLock& operator=(const DeviceLock&) = delete;

 private:
  int fd_ = -1;
};

}  // namespace lpsnet::cli
