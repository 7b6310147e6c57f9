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

#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include "cladlab/encoder.hpp"

namespace cladlab {

// Versioned binary container for model weights.
//
//   magic    8 bytes  "CLADCKPT"
//   version  u32      kCheckpointVersion
//   config   u64 input_len, u32 kernel, u32 stride, u32 feature_dim,
//            u32 n_channels, u32 channels[n_channels]
//   step     u64
//   count    u32
//   tensors  count x { u32 name_len, name bytes, u64 n, n x f32 }
//
// All integers and floats are little-endian. Tensor names are the stable
// parameter/buffer paths reported by the model ("blocks.0.conv.weight", ...).
inline constexpr std::uint32_t kCheckpointVersion = 1;

struct NamedTensor {
  std::string name;
  std::vector<float> values;
  bool operator==(const NamedTensor&) const = default;
};

struct Checkpoint {
  TinyEncoderConfig config;
  std::uint64_t step = 0;
  std::vector<NamedTensor> tensors;

  void save(const std::filesystem::path& path) const;
  static Checkpoint load(const std::filesystem::path& path);

  const NamedTensor* find(const std::string& name) const;
};

// Snapshot of every parameter and buffer of a model.
void append_tensors(Checkpoint& ckpt, std::span<const nn::ParameterRef> refs);
Checkpoint make_checkpoint(TinyEncoder& encoder, std::uint64_t step);

// Copies matching tensors into refs; throws FormatError on a missing name or
// size mismatch. Tensors in the checkpoint without a matching ref are ignored.
void restore_tensors(const Checkpoint& ckpt, std::span<const nn::ParameterRef> refs);
std::unique_ptr<TinyEncoder> load_encoder(const Checkpoint& ckpt);

}  // namespace cladlab
