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

#include <algorithm>
#include <cmath>
#include <numbers>

#include "cladlab/errors.hpp"
#include "cladlab/manipulations.hpp"

namespace cladlab {

double fade_gain(FadeShape shape, double t) {
  switch (shape) {
    case FadeShape::kLinear:
      return t;
    case FadeShape::kExponential:
      return t * std::pow(2.0, t - 1.0);
    case FadeShape::kLogarithmic:
      // log10(0.1) + 1 can round a hair below zero.
      return std::clamp(std::log10(0.1 + t) + 1.0, 0.0, 1.0);
    case FadeShape::kQuarterSine:
      return std::sin(t * std::numbers::pi / 2.0);
    case FadeShape::kHalfSine:
      return std::sin(t * std::numbers::pi - std::numbers::pi / 2.0) / 2.0 + 0.5;
  }
  return t;
}

std::vector<double> fade_in_mask(FadeShape shape, std::size_t len) {
  std::vector<double> mask(len, 0.0);
  if (len < 2) return mask;
  const double denom = static_cast<double>(len - 1);
  for (std::size_t i = 0; i < len; ++i) mask[i] = fade_gain(shape, static_cast<double>(i) / denom);
  return mask;
}

Waveform fade(const Waveform& w, double ratio, FadeShape shape) {
  if (!(ratio >= 0.0 && ratio <= 0.5)) {
    throw ArgumentError("fade: ratio must lie in [0, 0.5]");
  }
  Waveform out = w;
  const std::size_t n = w.size();
  const auto fade_len = static_cast<std::size_t>(std::floor(ratio * static_cast<double>(n)));
  if (fade_len == 0) return out;
  const std::vector<double> mask = fade_in_mask(shape, fade_len);
  for (std::size_t i = 0; i < fade_len; ++i) {
    out.samples[i] *= mask[i];
    out.samples[n - fade_len + i] *= mask[fade_len - 1 - i];
  }
  return out;
}

}  // namespace cladlab
