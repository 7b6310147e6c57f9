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

#include <filesystem>
#include <span>
#include <string>
#include <vector>

#include "cladlab/metrics.hpp"

namespace cladlab {

struct DetCurve {
  std::string label;
  std::vector<DetPoint> points;
};

// Static SVG of one or more DET curves (FRR against FAR, linear axes).
void write_det_svg(std::span<const DetCurve> curves, const std::filesystem::path& file);

struct Histogram {
  double lo = 0.0;
  double hi = 1.0;
  std::vector<std::size_t> real_counts;
  std::vector<std::size_t> fake_counts;
};

// Fixed-width bins over [0, 1]; the last bin is closed.
Histogram score_histogram(const ScoreSet& scores, std::size_t bins = 20);
void write_histogram_csv(const Histogram& h, const std::filesystem::path& file);
void write_histogram_svg(const Histogram& h, const std::filesystem::path& file);

}  // namespace cladlab
