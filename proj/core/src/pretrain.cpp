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
#include <numeric>

#include <nlohmann/json.hpp>

#include "cladlab/checkpoint.hpp"
#include "cladlab/contrastive.hpp"
#include "cladlab/errors.hpp"
#include "cladlab/losses.hpp"
#include "cladlab/rng.hpp"

namespace cladlab {

void TrainingConfig::validate() const {
  if (!(temperature > 0.0)) throw ArgumentError("temperature must be positive");
  if (!(momentum >= 0.0 && momentum <= 1.0)) throw ArgumentError("momentum must lie in [0, 1]");
  if (queue_size == 0) throw ArgumentError("queue_size must be positive");
  if (!(length_weight >= 0.0)) throw ArgumentError("length_weight must be non-negative");
  if (!(margin >= 0.0)) throw ArgumentError("margin must be non-negative");
  if (!(real_weight > 0.0)) throw ArgumentError("real_weight must be positive");
  if (!(pretrain_lr > 0.0) || !(downstream_lr > 0.0)) {
    throw ArgumentError("learning rates must be positive");
  }
  if (pretrain_weight_decay < 0.0 || downstream_weight_decay < 0.0) {
    throw ArgumentError("weight decay must be non-negative");
  }
  if (pretrain_batch == 0 || downstream_batch == 0) throw ArgumentError("batch sizes must be positive");
  if (pretrain_batch > queue_size) throw ArgumentError("pretrain_batch must not exceed queue_size");
  if (input_len == 0) throw ArgumentError("input_len must be positive");
}

void to_json(nlohmann::json& j, const TrainingConfig& c) {
  j = nlohmann::json{{"temperature", c.temperature},
                     {"momentum", c.momentum},
                     {"queue_size", c.queue_size},
                     {"length_weight", c.length_weight},
                     {"margin", c.margin},
                     {"real_weight", c.real_weight},
                     {"pretrain_lr", c.pretrain_lr},
                     {"pretrain_weight_decay", c.pretrain_weight_decay},
                     {"pretrain_epochs", c.pretrain_epochs},
                     {"pretrain_batch", c.pretrain_batch},
                     {"cosine_annealing", c.cosine_annealing},
                     {"downstream_lr", c.downstream_lr},
                     {"downstream_weight_decay", c.downstream_weight_decay},
                     {"downstream_epochs", c.downstream_epochs},
                     {"downstream_batch", c.downstream_batch},
                     {"input_len", c.input_len},
                     {"include_positive_in_denominator", c.include_positive_in_denominator},
                     {"freeze_encoder", c.freeze_encoder}};
}

void from_json(const nlohmann::json& j, TrainingConfig& c) {
  TrainingConfig d;
  c.temperature = j.value("temperature", d.temperature);
  c.momentum = j.value("momentum", d.momentum);
  c.queue_size = j.value("queue_size", d.queue_size);
  c.length_weight = j.value("length_weight", d.length_weight);
  c.margin = j.value("margin", d.margin);
  c.real_weight = j.value("real_weight", d.real_weight);
  c.pretrain_lr = j.value("pretrain_lr", d.pretrain_lr);
  c.pretrain_weight_decay = j.value("pretrain_weight_decay", d.pretrain_weight_decay);
  c.pretrain_epochs = j.value("pretrain_epochs", d.pretrain_epochs);
  c.pretrain_batch = j.value("pretrain_batch", d.pretrain_batch);
  c.cosine_annealing = j.value("cosine_annealing", d.cosine_annealing);
  c.downstream_lr = j.value("downstream_lr", d.downstream_lr);
  c.downstream_weight_decay = j.value("downstream_weight_decay", d.downstream_weight_decay);
  c.downstream_epochs = j.value("downstream_epochs", d.downstream_epochs);
  c.downstream_batch = j.value("downstream_batch", d.downstream_batch);
  c.input_len = j.value("input_len", d.input_len);
  c.include_positive_in_denominator =
      j.value("include_positive_in_denominator", d.include_positive_in_denominator);
  c.freeze_encoder = j.value("freeze_encoder", d.freeze_encoder);
}

LossBreakdown pretrain_loss(double contrastive, double length, double length_weight) {
  return {contrastive, length, contrastive + length_weight * length};
}

double cosine_lr(double base_lr, std::size_t epoch, std::size_t total_epochs) {
  if (total_epochs == 0) return base_lr;
  const double t = static_cast<double>(std::min(epoch, total_epochs)) /
                   static_cast<double>(total_epochs);
  return base_lr * (1.0 + std::cos(std::numbers::pi * t)) / 2.0;
}

std::size_t steps_per_epoch(std::size_t n_samples, std::size_t batch) {
  if (batch == 0) throw ArgumentError("batch size must be positive");
  return (n_samples + batch - 1) / batch;
}

void to_json(nlohmann::json& j, const StepRecord& r) {
  j = nlohmann::json{{"epoch", r.epoch},
                     {"step", r.step},
                     {"lr", r.lr},
                     {"contrastive", r.loss.contrastive},
                     {"length", r.loss.length},
                     {"total", r.loss.total}};
}

LossBreakdown pretrain_step(EncoderPair& pair, NegativeQueue& queue, const PretrainBatch& batch,
                            const TrainingConfig& cfg, Adam& optimizer, double lr) {
  if (!pair.query || !pair.key) throw ArgumentError("pretrain_step: encoder pair is incomplete");
  if (batch.view_a.size() != batch.view_b.size() || batch.view_a.size() != batch.labels.size()) {
    throw ArgumentError("pretrain_step: views and labels differ in size");
  }
  if (batch.view_a.empty()) throw ArgumentError("pretrain_step: empty batch");

  const FeatureMatrix q = pair.query->forward(batch.view_a, ForwardMode::kTraining);
  const FeatureMatrix k =
      normalize_rows(pair.key->forward(batch.view_b, ForwardMode::kBatchStatistics));

  const LossWithGrad con =
      contrastive_loss(q, k, queue, cfg.temperature, cfg.include_positive_in_denominator);
  const LossWithGrad len = length_loss(q, batch.labels, cfg.real_weight, cfg.margin);

  pair.query->zero_grad();
  pair.query->backward(con.grad + cfg.length_weight * len.grad);
  const auto params = pair.query->parameters();
  optimizer.step(params, lr);
  momentum_update(pair);
  queue.push(k);
  return pretrain_loss(con.loss, len.loss, cfg.length_weight);
}

PretrainBatch make_pretrain_batch(const Dataset& data, std::span<const std::size_t> indices,
                                  const AugmentationPolicy& policy, const NoiseBank& bank,
                                  std::size_t input_len, std::uint64_t stream_seed) {
  PretrainBatch batch;
  batch.view_a.reserve(indices.size());
  batch.view_b.reserve(indices.size());
  batch.labels.reserve(indices.size());
  for (std::size_t i = 0; i < indices.size(); ++i) {
    if (indices[i] >= data.size()) throw ArgumentError("pretrain batch index out of range");
    const LabeledSample& s = data[indices[i]];
    Rng rng = make_rng(derive_seed(stream_seed, {i}));
    const Waveform clip = fix_length(s.audio, input_len);
    batch.view_a.push_back(fix_length(sample_view(policy, clip, bank, rng).audio, input_len));
    batch.view_b.push_back(fix_length(sample_view(policy, clip, bank, rng).audio, input_len));
    batch.labels.push_back(s.label);
  }
  return batch;
}

PretrainResult pretrain(const Dataset& data, std::unique_ptr<Encoder> query,
                        const TrainingConfig& cfg, const AugmentationPolicy& policy,
                        const NoiseBank& bank, const PretrainOptions& options) {
  cfg.validate();
  policy.validate();
  if (!query) throw ArgumentError("pretrain: no encoder given");
  if (query->input_len() != cfg.input_len) {
    throw ArgumentError("pretrain: encoder input length differs from the training input_len");
  }
  if (data.empty()) throw ArgumentError("pretrain: empty dataset");

  PretrainResult result;
  result.pair = clone_into_key(std::move(query), cfg.momentum);
  NegativeQueue queue(cfg.queue_size, result.pair.query->feature_dim(),
                      derive_seed(options.seed, {0x71}));
  Adam optimizer(AdamOptions{.weight_decay = cfg.pretrain_weight_decay});

  std::vector<std::size_t> order(data.size());
  const std::size_t n_steps = steps_per_epoch(data.size(), cfg.pretrain_batch);
  for (std::size_t epoch = 0; epoch < cfg.pretrain_epochs; ++epoch) {
    const double lr = cfg.cosine_annealing
                          ? cosine_lr(cfg.pretrain_lr, epoch, cfg.pretrain_epochs)
                          : cfg.pretrain_lr;
    std::iota(order.begin(), order.end(), std::size_t{0});
    Rng shuffle_rng = make_rng(derive_seed(options.seed, {0x5f, epoch}));
    std::shuffle(order.begin(), order.end(), shuffle_rng);
    for (std::size_t step = 0; step < n_steps; ++step) {
      const std::size_t begin = step * cfg.pretrain_batch;
      const std::size_t end = std::min(begin + cfg.pretrain_batch, order.size());
      const std::span<const std::size_t> idx(order.data() + begin, end - begin);
      const PretrainBatch batch = make_pretrain_batch(
          data, idx, policy, bank, cfg.input_len, derive_seed(options.seed, {0xba, epoch, step}));
      StepRecord rec;
      rec.epoch = epoch;
      rec.step = result.steps;
      rec.lr = lr;
      rec.loss = pretrain_step(result.pair, queue, batch, cfg, optimizer, lr);
      ++result.steps;
      if (!std::isfinite(rec.loss.total)) {
        throw DomainError("pretraining diverged at step " + std::to_string(rec.step));
      }
      if (options.on_step) options.on_step(rec);
      result.log.push_back(rec);
    }
  }

  if (options.checkpoint_path) {
    auto* tiny = dynamic_cast<TinyEncoder*>(result.pair.query.get());
    if (tiny == nullptr) throw ArgumentError("checkpoints are only supported for TinyEncoder");
    make_checkpoint(*tiny, result.steps).save(*options.checkpoint_path);
  }
  return result;
}

}  // namespace cladlab
