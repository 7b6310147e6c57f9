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
#include <initializer_list>
#include <random>

namespace cladlab {

using Rng = std::mt19937_64;

// Deterministically derives an independent child seed from a parent seed and
// a sequence of stream tags (splitmix64 mixing). Used to pre-split rng streams
// per epoch / batch / sample so that results never depend on call order.
std::uint64_t derive_seed(std::uint64_t parent,
                          std::initializer_list<std::uint64_t> tags);

inline Rng make_rng(std::uint64_t seed) { return Rng(seed); }

}  // namespace cladlab
