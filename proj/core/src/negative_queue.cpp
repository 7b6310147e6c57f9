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

#include <cmath>
#include <random>
#include <string>

#include "cladlab/contrastive.hpp"
#include "cladlab/errors.hpp"
#include "cladlab/rng.hpp"

namespace cladlab {

NegativeQueue::NegativeQueue(std::size_t capacity, std::size_t dim, std::uint64_t seed) {
  if (capacity == 0 || dim == 0) throw ArgumentError("negative queue: K and D must be positive");
  storage_.resize(static_cast<Eigen::Index>(capacity), static_cast<Eigen::Index>(dim));
  Rng rng(seed);
  std::normal_distribution<double> normal(0.0, 1.0);
  for (Eigen::Index r = 0; r < storage_.rows(); ++r) {
    double n = 0.0;
    while (n < 1e-12) {
      for (Eigen::Index c = 0; c < storage_.cols(); ++c) storage_(r, c) = normal(rng);
      n = storage_.row(r).norm();
    }
    storage_.row(r) /= n;
  }
  fill_ = capacity;
}

void NegativeQueue::push(const FeatureMatrix& keys) {
  if (static_cast<std::size_t>(keys.cols()) != dim()) {
    throw ArgumentError("negative queue: key dimension mismatch");
  }
  if (static_cast<std::size_t>(keys.rows()) > capacity()) {
    throw ArgumentError("negative queue: batch larger than the queue");
  }
  for (Eigen::Index r = 0; r < keys.rows(); ++r) {
    if (std::abs(keys.row(r).norm() - 1.0) > 1e-5) {
      throw ArgumentError("negative queue: key row " + std::to_string(r) + " is not unit norm");
    }
  }
  for (Eigen::Index r = 0; r < keys.rows(); ++r) {
    storage_.row(static_cast<Eigen::Index>(cursor_)) = keys.row(r);
    cursor_ = (cursor_ + 1) % capacity();
  }
  fill_ = capacity();
}

}  // namespace cladlab
