// Copyright 2026 The cladlab Authors
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

#include "cladlab/checkpoint.hpp"

#include <bit>
#include <cstring>
#include <fstream>
#include <iterator>

#include "cladlab/errors.hpp"

namespace cladlab {
namespace {

constexpr char kMagic[8] = {'C', 'L', 'A', 'D', 'C', 'K', 'P', 'T'};

class Writer {
 public:
  void u32(std::uint32_t v) {
    for (int i = 0; i < 4; ++i) buf_.push_back(static_cast<char>((v >> (8 * i)) & 0xff));
  }
  void u64(std::uint64_t v) {
    for (int i = 0; i < 8; ++i) buf_.push_back(static_cast<char>((v >> (8 * i)) & 0xff));
  }
  void f32(float f) { u32(std::bit_cast<std::uint32_t>(f)); }
  void bytes(const char* p, std::size_t n) { buf_.append(p, n); }
  const std::string& str() const { return buf_; }

 private:
  std::string buf_;
};

class Reader {
 public:
  Reader(std::string data, std::string source) : data_(std::move(data)), source_(std::move(source)) {}
  void need(std::size_t n, const char* what) const {
    if (pos_ + n > data_.size()) throw FormatError(source_ + ": truncated checkpoint (" + what + ")");
  }
  std::uint32_t u32(const char* what) {
    need(4, what);
    std::uint32_t v = 0;
    for (int i = 0; i < 4; ++i) v |= static_cast<std::uint32_t>(static_cast<unsigned char>(data_[pos_++])) << (8 * i);
    return v;
  }
  std::uint64_t u64(const char* what) {
    need(8, what);
    std::uint64_t v = 0;
    for (int i = 0; i < 8; ++i) v |= static_cast<std::uint64_t>(static_cast<unsigned char>(data_[pos_++])) << (8 * i);
    return v;
  }
  float f32(const char* what) { return std::bit_cast<float>(u32(what)); }
  std::string bytes(std::size_t n, const char* what) {
    need(n, what);
    std::string s = data_.substr(pos_, n);
    pos_ += n;
    return s;
  }
  bool done() const { return pos_ == data_.size(); }

 private:
  std::string data_;
  std::string source_;
  std::size_t pos_ = 0;
};

}  // namespace

void Checkpoint::save(const std::filesystem::path& path) const {
  Writer w;
  w.bytes(kMagic, sizeof(kMagic));
  w.u32(kCheckpointVersion);
  w.u64(config.input_len);
  w.u32(static_cast<std::uint32_t>(config.kernel));
  w.u32(static_cast<std::uint32_t>(config.stride));
  w.u32(static_cast<std::uint32_t>(config.feature_dim));
  w.u32(static_cast<std::uint32_t>(config.channels.size()));
  for (std::size_t c : config.channels) w.u32(static_cast<std::uint32_t>(c));
  w.u64(step);
  w.u32(static_cast<std::uint32_t>(tensors.size()));
  for (const NamedTensor& t : tensors) {
    w.u32(static_cast<std::uint32_t>(t.name.size()));
    w.bytes(t.name.data(), t.name.size());
    w.u64(t.values.size());
    for (float f : t.values) w.f32(f);
  }
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw IoError("cannot open " + path.string() + " for writing");
  out.write(w.str().data(), static_cast<std::streamsize>(w.str().size()));
  if (!out) throw IoError("write failed: " + path.string());
}

Checkpoint Checkpoint::load(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open " + path.string());
  Reader r(std::string((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>()),
           path.string());
  if (r.bytes(sizeof(kMagic), "magic") != std::string(kMagic, sizeof(kMagic))) {
    throw FormatError(path.string() + ": bad magic (not a CLADCKPT file)");
  }
  const std::uint32_t version = r.u32("version");
  if (version != kCheckpointVersion) {
    throw FormatError(path.string() + ": unsupported checkpoint version " + std::to_string(version));
  }
  Checkpoint ckpt;
  ckpt.config.input_len = r.u64("input_len");
  ckpt.config.kernel = r.u32("kernel");
  ckpt.config.stride = r.u32("stride");
  ckpt.config.feature_dim = r.u32("feature_dim");
  const std::uint32_t n_channels = r.u32("n_channels");
  ckpt.config.channels.clear();
  for (std::uint32_t i = 0; i < n_channels; ++i) ckpt.config.channels.push_back(r.u32("channels"));
  ckpt.step = r.u64("step");
  const std::uint32_t count = r.u32("tensor count");
  for (std::uint32_t i = 0; i < count; ++i) {
    NamedTensor t;
    t.name = r.bytes(r.u32("name length"), "name");
    const std::uint64_t n = r.u64("tensor size");
    r.need(n * 4, "tensor data");
    t.values.resize(n);
    for (float& f : t.values) f = r.f32("tensor data");
    ckpt.tensors.push_back(std::move(t));
  }
  if (!r.done()) throw FormatError(path.string() + ": trailing bytes after last tensor");
  return ckpt;
}

const NamedTensor* Checkpoint::find(const std::string& name) const {
  for (const NamedTensor& t : tensors) {
    if (t.name == name) return &t;
  }
  return nullptr;
}

void append_tensors(Checkpoint& ckpt, std::span<const nn::ParameterRef> refs) {
  for (const nn::ParameterRef& ref : refs) {
    ckpt.tensors.push_back({ref.name, std::vector<float>(ref.values.begin(), ref.values.end())});
  }
}

Checkpoint make_checkpoint(TinyEncoder& encoder, std::uint64_t step) {
  Checkpoint ckpt;
  ckpt.config = encoder.config();
  ckpt.step = step;
  append_tensors(ckpt, encoder.parameters());
  append_tensors(ckpt, encoder.buffers());
  return ckpt;
}

void restore_tensors(const Checkpoint& ckpt, std::span<const nn::ParameterRef> refs) {
  for (const nn::ParameterRef& ref : refs) {
    const NamedTensor* t = ckpt.find(ref.name);
    if (t == nullptr) throw FormatError("checkpoint is missing tensor '" + ref.name + "'");
    if (t->values.size() != ref.values.size()) {
      throw FormatError("checkpoint tensor '" + ref.name + "' has " + std::to_string(t->values.size()) +
                        " values, expected " + std::to_string(ref.values.size()));
    }
    std::copy(t->values.begin(), t->values.end(), ref.values.begin());
  }
}

std::unique_ptr<TinyEncoder> load_encoder(const Checkpoint& ckpt) {
  auto enc = std::make_unique<TinyEncoder>(ckpt.config, 0);
  restore_tensors(ckpt, enc->parameters());
  restore_tensors(ckpt, enc->buffers());
  return enc;
}

}  // namespace cladlab
