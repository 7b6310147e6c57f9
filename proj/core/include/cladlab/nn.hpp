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

#include <cstddef>
#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "cladlab/rng.hpp"

namespace cladlab::nn {

// A trainable tensor: values plus an equally sized gradient accumulator.
struct Tensor {
  std::vector<std::size_t> shape;
  std::vector<float> values;
  std::vector<float> grads;

  Tensor() = default;
  explicit Tensor(std::vector<std::size_t> dims);
  std::size_t size() const noexcept { return values.size(); }
};

// View of a named parameter (grads non-empty) or buffer (grads empty).
struct ParameterRef {
  std::string name;
  std::span<float> values;
  std::span<float> grads;
};

// Uniform(-bound, bound) fill, bound = 1/sqrt(fan_in).
void init_uniform(Tensor& t, std::size_t fan_in, Rng& rng);

// Valid (unpadded) strided 1-D convolution over [batch][channels][time].
class Conv1d {
 public:
  Conv1d() = default;
  Conv1d(std::size_t in_channels, std::size_t out_channels, std::size_t kernel, std::size_t stride);

  std::size_t out_len(std::size_t in_len) const;
  std::size_t in_channels() const noexcept { return in_channels_; }
  std::size_t out_channels() const noexcept { return out_channels_; }

  void forward(std::span<const float> x, std::size_t batch, std::size_t in_len,
               std::vector<float>& y) const;
  // Accumulates weight/bias gradients; fills dx when non-null.
  void backward(std::span<const float> x, std::span<const float> dy, std::size_t batch,
                std::size_t in_len, std::vector<float>* dx);

  Tensor weight;  // [out][in][kernel]
  Tensor bias;    // [out]

 private:
  std::size_t in_channels_ = 0;
  std::size_t out_channels_ = 0;
  std::size_t kernel_ = 0;
  std::size_t stride_ = 1;
};

enum class BatchNormMode {
  kInference,        // running statistics
  kTraining,         // batch statistics, running statistics updated
  kBatchStatistics,  // batch statistics, running statistics untouched
};

class BatchNorm1d {
 public:
  BatchNorm1d() = default;
  explicit BatchNorm1d(std::size_t channels, float momentum = 0.1f, float eps = 1e-5f);

  // In place on x = [batch][channels][len]. In the batch-statistics modes
  // x_hat and inv_std are filled for backward().
  void forward(std::span<float> x, std::size_t batch, std::size_t len, BatchNormMode mode,
               std::vector<float>* x_hat, std::vector<float>* inv_std);
  // dy -> dx in place; accumulates gamma/beta gradients.
  void backward(std::span<float> dy, std::span<const float> x_hat, std::span<const float> inv_std,
                std::size_t batch, std::size_t len);

  Tensor gamma;
  Tensor beta;
  std::vector<float> running_mean;
  std::vector<float> running_var;

 private:
  std::size_t channels_ = 0;
  float momentum_ = 0.1f;
  float eps_ = 1e-5f;
};

// y = x W^T + b over rows of x.
class Linear {
 public:
  Linear() = default;
  Linear(std::size_t in_features, std::size_t out_features);

  std::size_t in_features() const noexcept { return in_; }
  std::size_t out_features() const noexcept { return out_; }

  void forward(std::span<const float> x, std::size_t batch, std::vector<float>& y) const;
  void backward(std::span<const float> x, std::span<const float> dy, std::size_t batch,
                std::vector<float>* dx);

  Tensor weight;  // [out][in]
  Tensor bias;    // [out]

 private:
  std::size_t in_ = 0;
  std::size_t out_ = 0;
};

}  // namespace cladlab::nn
