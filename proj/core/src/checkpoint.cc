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

#include <cstdint>
#include <cstring>
#include <fstream>
#include <map>

#include "lpsnet/error.h"

namespace lpsnet::inline LPSNET_ABI_NAMESPACE {
namespace {

constexpr char kMagic[8] = {'L', 'P', 'S', 'C', 'K', 'P', 'T', '1'};

template <typename T>
void put(std::ofstream& out, T v) {
  out.write(reinterpret_cast<const char*>(&v), sizeof(T));
}

void put_string(std::ofstream& out, const std::string& s) {
  put<std::uint32_t>(out, static_cast<std::uint32_t>(s.size()));
  out.write(s.data(), static_cast<std::streamsize>(s.size()));
}

void put_tensor(std::ofstream& out, const std::string& name, const Tensor& t) {
  put_string(out, name);
  const Dims& d = t.dims();
  for (int v : {d.n, d.c, d.h, d.w}) put<std::int32_t>(out, v);
  std::vector<float> buf(t.values().begin(), t.values().end());
  out.write(reinterpret_cast<const char*>(buf.data()),
            static_cast<std::streamsize>(buf.size() * sizeof(float)));
}

class Reader {
 public:
  Reader(std::ifstream& in, const std::string& path) : in_(in), path_(path) {}

  template <typename T>
  T get() {
    T v{};
    in_.read(reinterpret_cast<char*>(&v), sizeof(T));
    if (!in_) throw ParseError(path_ + ": truncated checkpoint");
    return v;
  }
  std::string get_string() {
    const auto len = get<std::uint32_t>();
    if (len > (1u << 24)) throw ParseError(path_ + ": implausible string length");
    std::string s(len, '\0');
    in_.read(s.data(), len);
    if (!in_) throw ParseError(path_ + ": truncated checkpoint");
    return s;
  }
  void get_floats(std::vector<float>& buf) {
    in_.read(reinterpret_cast<char*>(buf.data()),
             static_cast<std::streamsize>(buf.size() * sizeof(float)));
    if (!in_) throw ParseError(path_ + ": truncated checkpoint");
  }

 private:
  std::ifstream& in_;
  const std::string& path_;
};

}  // namespace

void save_checkpoint(const NetworkInstance& net, const std::string& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error("cannot write checkpoint '" + path + "'");
  out.write(kMagic, sizeof(kMagic));
  put_string(out, serialize(net.spec()));
  put_string(out, std::string(to_string(net.block_kind())));
  put_string(out, std::string(to_string(net.interaction_kind())));
  put<std::int32_t>(out, net.num_classes());
  put<std::uint64_t>(out, net.seed());
  const auto& ps = net.parameters();
  put<std::uint32_t>(out, static_cast<std::uint32_t>(ps.params.size() + ps.buffers.size()));
  for (const auto& [name, v] : ps.params) put_tensor(out, name, v.value());
  for (const auto& [name, t] : ps.buffers) put_tensor(out, name, *t);
  if (!out) throw Error("failed writing checkpoint '" + path + "'");
}

NetworkInstance load_checkpoint(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ParseError("cannot open checkpoint '" + path + "'");
  char magic[8];
  in.read(magic, sizeof(magic));
  if (!in || std::memcmp(magic, kMagic, sizeof(kMagic)) != 0) {
    throw ParseError(path + ": not an lpsnet checkpoint");
  }
  Reader r(in, path);
  const NetworkSpec spec = parse_spec(r.get_string());
  const BlockKind block = parse_block_kind(r.get_string());
  const InteractionKind inter = parse_interaction_kind(r.get_string());
  const int classes = r.get<std::int32_t>();
  const auto seed = r.get<std::uint64_t>();
  NetworkInstance net = NetworkInstance::build(spec, block, inter, classes, seed);

  std::map<std::string, Tensor*> slots;
  for (auto& [name, v] : net.parameters().params) slots[name] = &v.mutable_value();
  for (auto& [name, t] : net.parameters().buffers) slots[name] = t.get();

  const auto count = r.get<std::uint32_t>();
  if (count != slots.size()) {
    throw ParseError(path + ": checkpoint holds " + std::to_string(count) +
                     " tensors, network expects " + std::to_string(slots.size()));
  }
  for (std::uint32_t i = 0; i < count; ++i) {
    const std::string name = r.get_string();
    Dims d;
    d.n = r.get<std::int32_t>();
    d.c = r.get<std::int32_t>();
    d.h = r.get<std::int32_t>();
    d.w = r.get<std::int32_t>();
    auto it = slots.find(name);
    if (it == slots.end()) throw ParseError(path + ": unexpected tensor '" + name + "'");
    if (!(it->second->dims() == d)) {
      throw ParseError(path + ": tensor '" + name + "' has shape " + d.to_string() +
                       ", expected " + it->second->dims().to_string());
    }
    std::vector<float> buf(d.numel());
    r.get_floats(buf);
    std::copy(buf.begin(), buf.end(), it->second->values().begin());
  }
  return net;
}

}  // namespace lpsnet
