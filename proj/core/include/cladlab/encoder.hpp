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
#include <memory>
#include <span>
#include <vector>

#include <Eigen/Core>
#include <nlohmann/json_fwd.hpp>

#include "cladlab/audio.hpp"
#include "cladlab/nn.hpp"

namespace cladlab {

// Row-major N x D batch of features (or logits).
using FeatureMatrix = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;

struct FeatureVector {
  std::vector<double> values;
  double norm() const;
};

enum class ForwardMode {
  kInference,        // running normalization statistics, nothing cached
  kTraining,         // batch statistics, running statistics updated, activations cached
  kBatchStatistics,  // batch statistics, no state change (momentum key encoder)
};

// Waveform batch -> D-dimensional features. Anything honouring this contract
// (and exposing a flat, stably-named parameter list) can serve as the encoder.
class Encoder {
 public:
  virtual ~Encoder() = default;

  virtual std::size_t feature_dim() const = 0;
  virtual std::size_t input_len() const = 0;

  // One row per waveform, in order. Every waveform must have input_len()
  // samples.
  virtual FeatureMatrix forward(std::span<const Waveform> batch, ForwardMode mode) = 0;

  // Backpropagates d(loss)/d(features) of the most recent kTraining forward,
  // accumulating into parameter gradients.
  virtual void backward(const FeatureMatrix& grad_features) = 0;

  virtual std::vector<nn::ParameterRef> parameters() = 0;
  virtual std::vector<nn::ParameterRef> buffers() = 0;

  virtual std::unique_ptr<Encoder> clone() const = 0;

  void zero_grad();
};

struct TinyEncoderConfig {
  std::size_t input_len = 16000;
  std::vector<std::size_t> channels{16, 32, 64};
  std::size_t kernel = 9;
  std::size_t stride = 4;
  std::size_t feature_dim = 32;

  void validate() const;
  bool operator==(const TinyEncoderConfig&) const = default;
};

void to_json(nlohmann::json& j, const TinyEncoderConfig& c);
void from_json(const nlohmann::json& j, TinyEncoderConfig& c);

// Conv -> BatchNorm -> ReLU blocks, global average pool, affine map to D.
class TinyEncoder final : public Encoder {
 public:
  TinyEncoder(TinyEncoderConfig config, std::uint64_t seed);

  const TinyEncoderConfig& config() const noexcept { return config_; }

  std::size_t feature_dim() const override { return config_.feature_dim; }
  std::size_t input_len() const override { return config_.input_len; }
  FeatureMatrix forward(std::span<const Waveform> batch, ForwardMode mode) override;
  void backward(const FeatureMatrix& grad_features) override;
  std::vector<nn::ParameterRef> parameters() override;
  std::vector<nn::ParameterRef> buffers() override;
  std::unique_ptr<Encoder> clone() const override;

 private:
  struct Block {
    nn::Conv1d conv;
    nn::BatchNorm1d bn;
  };
  struct Cache {
    std::size_t batch = 0;
    std::vector<std::vector<float>> inputs;  // input of each block
    std::vector<std::vector<float>> x_hat;
    std::vector<std::vector<float>> inv_std;
    std::vector<std::vector<float>> outputs;  // post-ReLU
    std::vector<std::size_t> lengths;         // input length of each block
    std::vector<float> pooled;
  };

  TinyEncoderConfig config_;
  std::vector<Block> blocks_;
  nn::Linear proj_;
  Cache cache_;
};

struct EncoderPair {
  std::unique_ptr<Encoder> query;
  std::unique_ptr<Encoder> key;
  double momentum = 0.999;
};

// Key := deep copy of query.
EncoderPair clone_into_key(std::unique_ptr<Encoder> query, double momentum);

// theta_k := mu * theta_k + (1 - mu) * theta_q over every parameter and buffer.
void momentum_update(EncoderPair& pair);
void momentum_update(Encoder& key, Encoder& query, double momentum);

// Inference-mode encoding of a batch fixed to enc.input_len().
std::vector<FeatureVector> encode_batch(Encoder& enc, std::span<const Waveform> batch);

// Converts a waveform batch to a dense float matrix, checking lengths.
std::vector<float> stack_batch(std::span<const Waveform> batch, std::size_t input_len);

}  // namespace cladlab
