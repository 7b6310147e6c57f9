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
#include <functional>
#include <optional>
#include <string>
#include <vector>

#include <nlohmann/json_fwd.hpp>

#include "cladlab/dataset.hpp"
#include "cladlab/encoder.hpp"
#include "cladlab/manipulations.hpp"
#include "cladlab/optimizer.hpp"

namespace cladlab {

// FIFO ring of K unit-norm key features used as contrastive negatives.
class NegativeQueue {
 public:
  // Warm start: K i.i.d. random unit vectors, deterministic given seed.
  NegativeQueue(std::size_t capacity, std::size_t dim, std::uint64_t seed);

  std::size_t capacity() const noexcept { return static_cast<std::size_t>(storage_.rows()); }
  std::size_t dim() const noexcept { return static_cast<std::size_t>(storage_.cols()); }
  std::size_t fill() const noexcept { return fill_; }
  std::size_t write_cursor() const noexcept { return cursor_; }
  const FeatureMatrix& storage() const noexcept { return storage_; }

  // Overwrites the oldest rows in order. Rows must be unit norm within 1e-5
  // and the batch no larger than the capacity; otherwise nothing is written.
  void push(const FeatureMatrix& keys);

 private:
  FeatureMatrix storage_;
  std::size_t cursor_ = 0;
  std::size_t fill_ = 0;
};

struct TrainingConfig {
  double temperature = 0.07;
  double momentum = 0.999;
  std::size_t queue_size = 6144;
  double length_weight = 2.0;  // weight of the length term in the pretraining objective
  double margin = 4.0;
  double real_weight = 9.0;
  double pretrain_lr = 0.0005;
  double pretrain_weight_decay = 0.0001;
  std::size_t pretrain_epochs = 150;
  std::size_t pretrain_batch = 24;
  bool cosine_annealing = true;
  double downstream_lr = 0.001;
  double downstream_weight_decay = 0.0001;
  std::size_t downstream_epochs = 10;
  std::size_t downstream_batch = 16;
  std::size_t input_len = 64600;
  bool include_positive_in_denominator = true;
  bool freeze_encoder = false;

  void validate() const;
};

void to_json(nlohmann::json& j, const TrainingConfig& c);
void from_json(const nlohmann::json& j, TrainingConfig& c);

struct LossBreakdown {
  double contrastive = 0.0;
  double length = 0.0;
  double total = 0.0;
};

LossBreakdown pretrain_loss(double contrastive, double length, double length_weight);

struct PretrainBatch {
  std::vector<Waveform> view_a;
  std::vector<Waveform> view_b;
  std::vector<int> labels;
};

// One optimization step: q = Enc_q(view_a), k = Enc_k(view_b) (no gradient),
// Adam update of the query encoder, momentum update of the key encoder, then
// enqueue the normalized keys.
LossBreakdown pretrain_step(EncoderPair& pair, NegativeQueue& queue, const PretrainBatch& batch,
                            const TrainingConfig& cfg, Adam& optimizer, double lr);

// lr_0 * (1 + cos(pi * epoch / total_epochs)) / 2.
double cosine_lr(double base_lr, std::size_t epoch, std::size_t total_epochs);

struct StepRecord {
  std::size_t epoch = 0;
  std::size_t step = 0;
  double lr = 0.0;
  LossBreakdown loss;
};

void to_json(nlohmann::json& j, const StepRecord& r);

struct PretrainOptions {
  std::uint64_t seed = 0;
  std::optional<std::filesystem::path> checkpoint_path;
  std::function<void(const StepRecord&)> on_step;
};

struct PretrainResult {
  EncoderPair pair;
  std::vector<StepRecord> log;
  std::uint64_t steps = 0;
};

// Builds both views of every sample with sample_view, fixes them to
// cfg.input_len, and runs pretrain_step over shuffled batches for
// cfg.pretrain_epochs epochs.
PretrainResult pretrain(const Dataset& data, std::unique_ptr<Encoder> query,
                        const TrainingConfig& cfg, const AugmentationPolicy& policy,
                        const NoiseBank& bank, const PretrainOptions& options);

// Views for one batch; rng stream derived from (seed, epoch, step).
PretrainBatch make_pretrain_batch(const Dataset& data, std::span<const std::size_t> indices,
                                  const AugmentationPolicy& policy, const NoiseBank& bank,
                                  std::size_t input_len, std::uint64_t stream_seed);

// Steps per epoch with a trailing partial batch kept.
std::size_t steps_per_epoch(std::size_t n_samples, std::size_t batch);

}  // namespace cladlab
