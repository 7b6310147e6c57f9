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
#include <filesystem>
#include <functional>
#include <memory>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include <nlohmann/json_fwd.hpp>

#include "cladlab/checkpoint.hpp"
#include "cladlab/contrastive.hpp"
#include "cladlab/dataset.hpp"
#include "cladlab/encoder.hpp"
#include "cladlab/manipulations.hpp"
#include "cladlab/nn.hpp"

namespace cladlab {

// Encoder followed by a D -> 2 affine head producing (fake, real) logits.
class Classifier {
 public:
  Classifier(std::unique_ptr<Encoder> encoder, std::uint64_t seed);

  Encoder& encoder() noexcept { return *encoder_; }
  const Encoder& encoder() const noexcept { return *encoder_; }
  nn::Linear& head() noexcept { return head_; }
  std::size_t input_len() const { return encoder_->input_len(); }

  // A frozen encoder always runs with running statistics and gets no gradient.
  void set_encoder_frozen(bool frozen) noexcept { frozen_ = frozen; }
  bool encoder_frozen() const noexcept { return frozen_; }

  // N x 2 logits. In kTraining mode the activations needed by backward() are
  // kept; features receives the encoder output when non-null.
  FeatureMatrix forward(std::span<const Waveform> batch, ForwardMode mode,
                        FeatureMatrix* features = nullptr);

  // Gradient w.r.t. the logits of the last training forward, plus an optional
  // extra gradient on the encoder features.
  void backward(const FeatureMatrix& grad_logits, const FeatureMatrix* grad_features = nullptr);

  // Trainable parameters: head.weight, head.bias, then the encoder's unless frozen.
  std::vector<nn::ParameterRef> parameters();
  void zero_grad();

 private:
  std::unique_ptr<Encoder> encoder_;
  nn::Linear head_;
  bool frozen_ = false;
  std::vector<float> cached_features_;
  std::size_t cached_batch_ = 0;
};

// Inference-mode real probabilities softmax(logits)[1], batched.
std::vector<double> score_batch(Classifier& classifier, std::span<const Waveform> batch);

Checkpoint make_checkpoint(Classifier& classifier, std::uint64_t step);
// Requires encoder and head tensors; the head is sized from the checkpoint config.
std::unique_ptr<Classifier> load_classifier(const Checkpoint& ckpt);

struct VariantConfig {
  bool use_contrastive_pretrain = true;
  bool use_length_loss = true;
  bool supervised_augmentation = true;

  static VariantConfig vanilla() { return {false, false, true}; }
  static VariantConfig cl() { return {true, false, true}; }
  static VariantConfig ll() { return {false, true, true}; }
  static VariantConfig clad() { return {true, true, true}; }

  // "vanilla", "cl", "ll", "clad"; anything else is not a preset.
  std::optional<std::string> preset_name() const;
  static VariantConfig from_name(std::string_view name);

  bool operator==(const VariantConfig&) const = default;
};

void to_json(nlohmann::json& j, const VariantConfig& v);
void from_json(const nlohmann::json& j, VariantConfig& v);

struct FinetuneStep {
  std::size_t epoch = 0;
  std::size_t step = 0;
  double loss = 0.0;
  double accuracy = 0.0;  // training-batch accuracy at p > 0.5
};

void to_json(nlohmann::json& j, const FinetuneStep& s);

struct FinetuneResult {
  std::size_t steps = 0;
  std::vector<FinetuneStep> log;
  double final_epoch_accuracy = 0.0;
};

struct FinetuneOptions {
  std::uint64_t seed = 0;
  std::function<void(const FinetuneStep&)> on_step;
};

// Adam at cfg.downstream_lr over shuffled mini-batches. With supervised
// augmentation every sample is replaced by sample_view(policy, x) first. With
// the length loss and no pretraining, cfg.length_weight * length_loss on the
// encoder features is added to the cross entropy.
FinetuneResult finetune(Classifier& classifier, const Dataset& data, const TrainingConfig& cfg,
                        const VariantConfig& variant, const AugmentationPolicy& policy,
                        const NoiseBank& bank, const FinetuneOptions& options);

struct TrainHooks {
  std::function<void(const StepRecord&)> on_pretrain_step;
  std::function<void(const FinetuneStep&)> on_finetune_step;
};

struct TrainedModel {
  std::unique_ptr<Classifier> classifier;
  std::vector<StepRecord> pretrain_log;
  FinetuneResult finetune;
};

// Pipeline stages. Seeds are derived from the model seed, so running the
// stages one by one reproduces train_variant exactly.
std::unique_ptr<Encoder> initial_encoder(TinyEncoderConfig encoder_cfg, const TrainingConfig& cfg,
                                         std::uint64_t seed);
// Contrastive pretraining; the length term is dropped when the variant has no length loss.
PretrainResult pretrain_stage(const Dataset& train, std::unique_ptr<Encoder> encoder,
                              const TrainingConfig& cfg, const VariantConfig& variant,
                              const AugmentationPolicy& policy, const NoiseBank& bank,
                              std::uint64_t seed, const TrainHooks& hooks = {});
TrainedModel finetune_stage(const Dataset& train, std::unique_ptr<Encoder> encoder,
                            const TrainingConfig& cfg, const VariantConfig& variant,
                            const AugmentationPolicy& policy, const NoiseBank& bank,
                            std::uint64_t seed, const TrainHooks& hooks = {});

// Full two-stage pipeline for one variant. The encoder input length is taken
// from cfg.input_len.
TrainedModel train_variant(const Dataset& train, TinyEncoderConfig encoder_cfg,
                           const TrainingConfig& cfg, const VariantConfig& variant,
                           const AugmentationPolicy& policy, const NoiseBank& bank,
                           std::uint64_t seed, const TrainHooks& hooks = {});

// --- Score files --------------------------------------------------------------

struct ScoreRecord {
  std::string sample_id;
  int label = 0;
  std::optional<std::vector<ManipulationSpec>> manipulation;
  double p = 0.0;

  // "none", a single tag, or tags joined by '>'.
  std::string manipulation_tag() const;
  bool operator==(const ScoreRecord&) const = default;
};

void to_json(nlohmann::json& j, const ScoreRecord& r);
void from_json(const nlohmann::json& j, ScoreRecord& r);

// One JSON object per line.
void write_scores(const std::vector<ScoreRecord>& records, const std::filesystem::path& file);
std::vector<ScoreRecord> read_scores(const std::filesystem::path& file);

// Clean scores of a whole dataset in fixed-size batches.
std::vector<ScoreRecord> score_dataset(Classifier& classifier, const Dataset& data,
                                       std::size_t batch = 64);

}  // namespace cladlab
