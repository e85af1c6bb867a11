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

#include "cli_support.h"

#include <fcntl.h>
#include <sys/file.h>
#include <unistd.h>

#include <cerrno>
#include <charconv>
#include <cstdio>
#include <cstdlib>
#include <cstring>
#include <string_view>
#include <vector>

#include "lpsnet/error.h"

namespace lpsnet::cli {
namespace {

std::vector<int> parse_extents(const std::string& text, std::size_t count, const char* what) {
  std::vector<int> out;
  std::string_view rest = text;
  while (true) {
    const auto x = rest.find_first_of("xX");
    const std::string_view part = rest.substr(0, x);
    int v = 0;
    const auto [end, ec] = std::from_chars(part.data(), part.data() + part.size(), v);
    if (part.empty() || ec != std::errc() || end != part.data() + part.size() || v <= 0) {
      throw InvalidArgument(std::string("bad ") + what + " '" + text + "'");
    }
    out.push_back(v);
    if (x == std::string_view::npos) break;
    rest = rest.substr(x + 1);
  }
  if (out.size() != count) throw InvalidArgument(std::string("bad ") + what + " '" + text + "'");
  return out;
}

}  // namespace

Resolution parse_resolution(const std::string& text) {
  const auto v = parse_extents(text, 2, "resolution (want HxW)");
  if (v[0] < kMinInputSize || v[1] < kMinInputSize) {
    throw InvalidArgument("resolution " + text + " is below the minimum " +
                          std::to_string(kMinInputSize) + "x" + std::to_string(kMinInputSize));
  }
  return {v[0], v[1]};
}

BlockShape parse_block_shape(const std::string& text) {
  const auto v = parse_extents(text, 3, "shape (want CxHxW)");
  return {v[0], v[1], v[2]};
}

NetworkSpec resolve_spec(const std::string& source) {
  if (source == "n0" || source == "N0") return initial_spec();
  if (source == "S" || source == "M" || source == "L" || source == "s" || source == "m" ||
      source == "l") {
    return preset(source);
  }
  return load_spec_file(source);
}

std::string device_from_env() {
  const char* dev = std::getenv("LPS_DEVICE");
  if (dev == nullptr || *dev == '\0') return "cpu";
  if (std::string_view(dev) != "cpu") {
    throw InvalidArgument(std::string("LPS_DEVICE=") + dev + " is not supported (only cpu)");
  }
  return dev;
}

std::optional<std::uint64_t> seed_from_env() {
  const char* s = std::getenv("LPS_SEED");
  if (s == nullptr || *s == '\0') return std::nullopt;
  std::uint64_t v = 0;
  const std::string_view sv(s);
  const auto [end, ec] = std::from_chars(sv.data(), sv.data() + sv.size(), v);
  if (ec != std::errc() || end != sv.data() + sv.size()) {
    throw InvalidArgument(std::string("LPS_SEED=") + s + " is not an unsigned integer");
  }
  return v;
}

std::uint64_t seed_or_env(std::uint64_t flag_value) {
  return seed_from_env().value_or(flag_value);
}

DeviceLock::DeviceLock(const std::string& device) {
  const char* env = std::getenv("LPS_LOCK_FILE");
  const std::string path = env && *env ? env : "/tmp/lpsnet-" + device + ".lock";
  fd_ = ::open(path.c_str(), O_RDWR | O_CREAT | O_CLOEXEC, 0666);
  if (fd_ < 0) throw Error("cannot open device lock " + path + ": " + std::strerror(errno));
  if (::flock(fd_, LOCK_EX | LOCK_NB) != 0) {
    std::fprintf(stderr, "waiting for device lock %s\n", path.c_str());
    if (::flock(fd_, LOCK_EX) != 0) {
      ::close(fd_);
      throw Error("cannot lock " + path + ": " + std::strerror(errno));
    }
  }
}

DeviceLock::~DeviceLock() {
  if (fd_ >= 0) {
    ::flock(fd_, LOCK_UN);
    ::close(fd_);
  }
}

}  // namespace lpsnet::cli
