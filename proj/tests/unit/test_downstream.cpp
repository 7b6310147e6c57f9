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
#include <filesystem>
#include <fstream>
#include <vector>

#include <gtest/gtest.h>
#include <nlohmann/json.hpp>

#include "cladlab/downstream.hpp"
#include "cladlab/errors.hpp"
#include "cladlab/losses.hpp"

namespace cladlab {
namespace {

namespace fs = std::filesystem;

TinyEncoderConfig small_encoder(std::size_t input_len) {
  TinyEncoderConfig c;
  c.input_len = input_len;
  c.channels = {8, 16};
  c.feature_dim = 16;
  return c;
}

Dataset small_dataset(std::size_t n, std::size_t len, std::uint64_t seed) {
  SynthConfig s;
  s.n_train = n;
  s.n_eval = 10;
  s.duration_samples = len;
  s.seed = seed;
  return generate_synthetic(s).train;
}

std::vector<Waveform> waves(const Dataset& d, std::size_t n) {
  std::vector<Waveform> out;
  for (std::size_t i = 0; i < n; ++i) out.push_back(d[i].audio);
  return out;
}

TEST(Classifier, ScoreFollowsSoftmaxOfHead) {
  Classifier c(std::make_unique<TinyEncoder>(small_encoder(400), 1), 2);
  std::fill(c.head().weight.values.begin(), c.head().weight.values.end(), 0.0f);
  c.head().bias.values = {0.0f, 0.0f};
  const Dataset d = small_dataset(10, 400, 1);
  for (double p : score_batch(c, waves(d, 4))) EXPECT_DOUBLE_EQ(p, 0.5);
  c.head().bias.values = {0.0f, static_cast<float>(std::log(3.0))};
  for (double p : score_batch(c, waves(d, 4))) EXPECT_NEAR(p, 0.75, 1e-6);
}

TEST(Classifier, ScoresDeterministicAndComplementary) {
  Classifier c(std::make_unique<TinyEncoder>(small_encoder(400), 3), 4);
  const Dataset d = small_dataset(10, 400, 2);
  const auto batch = waves(d, 6);
  const auto a = score_batch(c, batch);
  const auto b = score_batch(c, batch);
  EXPECT_EQ(a, b);
  const FeatureMatrix logits = c.forward(batch, ForwardMode::kInference);
  for (std::size_t i = 0; i < a.size(); ++i) {
    const auto r = static_cast<Eigen::Index>(i);
    const double fake = real_probability(logits(r, 1), logits(r, 0));
    EXPECT_NEAR(a[i] + fake, 1.0, 1e-6);
    EXPECT_GE(a[i], 0.0);
    EXPECT_LE(a[i], 1.0);
  }
  std::vector<Waveform> wrong{Waveform(std::vector<double>(399, 0.1), 16000)};
  EXPECT_THROW(score_batch(c, wrong), ArgumentError);
}

TEST(Classifier, FrozenEncoderExposesOnlyHead) {
  Classifier c(std::make_unique<TinyEncoder>(small_encoder(400), 5), 6);
  const std::size_t all = c.parameters().size();
  c.set_encoder_frozen(true);
  const auto params = c.parameters();
  ASSERT_EQ(params.size(), 2u);
  EXPECT_LT(params.size(), all);
  EXPECT_EQ(params[0].name, "head.weight");
  EXPECT_EQ(params[1].name, "head.bias");
}

TEST(Classifier, HeadGradientMatchesFiniteDifferences) {
  Classifier c(std::make_unique<TinyEncoder>(small_encoder(400), 7), 8);
  c.set_encoder_frozen(true);
  const Dataset d = small_dataset(10, 400, 3);
  const auto batch = waves(d, 5);
  std::vector<int> labels;
  for (std::size_t i = 0; i < 5; ++i) labels.push_back(d[i].label);
  auto loss = [&] { return downstream_loss_from_logits(c.forward(batch, ForwardMode::kInference), labels).loss; };
  c.zero_grad();
  const FeatureMatrix logits = c.forward(batch, ForwardMode::kTraining);
  c.backward(downstream_loss_from_logits(logits, labels).grad);
  for (auto& p : c.parameters()) {
    for (std::size_t i = 0; i < p.values.size(); ++i) {
      const float saved = p.values[i];
      const float h = 1e-2f;
      p.values[i] = saved + h;
      const double up = loss();
      p.values[i] = saved - h;
      const double down = loss();
      p.values[i] = saved;
      EXPECT_NEAR(p.grads[i], (up - down) / (2.0 * h), 1e-3) << p.name << i;
    }
  }
}

TEST(Classifier, CheckpointRoundTrip) {
  Classifier c(std::make_unique<TinyEncoder>(small_encoder(400), 9), 10);
  const fs::path p = fs::temp_directory_path() / "cladlab_unit_classifier.ckpt";
  make_checkpoint(c, 3).save(p);
  auto loaded = load_classifier(Checkpoint::load(p));
  const Dataset d = small_dataset(10, 400, 4);
  EXPECT_EQ(score_batch(*loaded, waves(d, 3)), score_batch(c, waves(d, 3)));
  TinyEncoder enc(small_encoder(400), 1);
  EXPECT_THROW(load_classifier(make_checkpoint(enc, 0)), FormatError);
}

TEST(Variant, PresetsAreExhaustive) {
  EXPECT_EQ(VariantConfig::vanilla(), (VariantConfig{false, false, true}));
  EXPECT_EQ(VariantConfig::cl(), (VariantConfig{true, false, true}));
  EXPECT_EQ(VariantConfig::ll(), (VariantConfig{false, true, true}));
  EXPECT_EQ(VariantConfig::clad(), (VariantConfig{true, true, true}));
  int presets = 0;
  for (bool a : {false, true}) {
    for (bool b : {false, true}) {
      for (bool c : {false, true}) {
        const VariantConfig v{a, b, c};
        if (const auto name = v.preset_name()) {
          ++presets;
          EXPECT_EQ(VariantConfig::from_name(*name), v);
          EXPECT_EQ(nlohmann::json(v).get<VariantConfig>(), v);
        }
      }
    }
  }
  EXPECT_EQ(presets, 4);
  EXPECT_THROW(VariantConfig::from_name("supervised"), Error);
  const VariantConfig custom{true, false, false};
  EXPECT_EQ(nlohmann::json(custom).get<VariantConfig>(), custom);
}

TEST(Finetune, StepCountFollowsBatches) {
  const std::size_t len = 400;
  const Dataset d = small_dataset(160, len, 5);
  TrainingConfig cfg;
  cfg.input_len = len;
  cfg.downstream_epochs = 10;
  cfg.downstream_batch = 16;
  Classifier c(std::make_unique<TinyEncoder>(small_encoder(len), 11), 12);
  VariantConfig v = VariantConfig::vanilla();
  v.supervised_augmentation = false;
  const FinetuneResult r = finetune(c, d, cfg, v, AugmentationPolicy{}, NoiseBank::synthetic(0), {});
  EXPECT_EQ(r.steps, 100u);
  EXPECT_EQ(r.log.size(), 100u);
  EXPECT_EQ(r.log.back().epoch, 9u);
  EXPECT_THROW(finetune(c, Dataset{}, cfg, v, AugmentationPolicy{}, NoiseBank::synthetic(0), {}), ArgumentError);
}

TEST(Finetune, DeterministicGivenSeed) {
  const std::size_t len = 400;
  const Dataset d = small_dataset(32, len, 6);
  TrainingConfig cfg;
  cfg.input_len = len;
  cfg.downstream_epochs = 2;
  FinetuneOptions opts;
  opts.seed = 4;
  auto run = [&] {
    Classifier c(std::make_unique<TinyEncoder>(small_encoder(len), 13), 14);
    finetune(c, d, cfg, VariantConfig::vanilla(), AugmentationPolicy{}, NoiseBank::synthetic(0), opts);
    return score_batch(c, waves(d, 8));
  };
  EXPECT_EQ(run(), run());
}

TEST(TrainVariant, VanillaSkipsPretraining) {
  const std::size_t len = 400;
  const Dataset d = small_dataset(16, len, 7);
  TrainingConfig cfg;
  cfg.input_len = len;
  cfg.downstream_epochs = 1;
  cfg.pretrain_epochs = 1;
  cfg.queue_size = 32;
  cfg.pretrain_batch = 8;
  std::size_t pretrain_steps = 0;
  TrainHooks hooks;
  hooks.on_pretrain_step = [&](const StepRecord&) { ++pretrain_steps; };
  const NoiseBank bank = NoiseBank::synthetic(0);
  const TrainedModel vanilla = train_variant(d, small_encoder(9999), cfg, VariantConfig::vanilla(), {}, bank, 1, hooks);
  EXPECT_TRUE(vanilla.pretrain_log.empty());
  EXPECT_EQ(pretrain_steps, 0u);
  EXPECT_EQ(vanilla.classifier->input_len(), len);
  const TrainedModel cl = train_variant(d, small_encoder(len), cfg, VariantConfig::cl(), {}, bank, 1, hooks);
  EXPECT_EQ(cl.pretrain_log.size(), 2u);
  EXPECT_EQ(pretrain_steps, 2u);
  for (const auto& s : cl.pretrain_log) EXPECT_EQ(s.loss.total, s.loss.contrastive);
}

TEST(TrainVariant, CladReachesNinetyPercentTrainingAccuracy) {
  const std::size_t len = 4000;
  const Dataset d = small_dataset(200, len, 8);
  TrainingConfig cfg;
  cfg.input_len = len;
  cfg.queue_size = 256;
  cfg.momentum = 0.99;
  cfg.pretrain_epochs = 2;
  cfg.downstream_epochs = 10;
  TinyEncoderConfig enc;
  const TrainedModel m = train_variant(d, enc, cfg, VariantConfig::clad(), AugmentationPolicy{},
                                       NoiseBank::synthetic(0), 3);
  EXPECT_EQ(m.finetune.steps, 10u * steps_per_epoch(200, 16));
  EXPECT_GE(m.finetune.final_epoch_accuracy, 0.9);
}

TEST(ScoreRecord, TagsAndFileRoundTrip) {
  ScoreRecord clean{"a", 1, std::nullopt, 0.25};
  ScoreRecord one{"b", 0, std::vector<ManipulationSpec>{VolumeParams{0.1}}, 0.5};
  ScoreRecord two{"c", 0, std::vector<ManipulationSpec>{VolumeParams{0.5}, WhiteNoiseParams{15.0}}, 0.75};
  EXPECT_EQ(clean.manipulation_tag(), "none");
  EXPECT_EQ(one.manipulation_tag(), "volume:factor=0.1");
  EXPECT_EQ(two.manipulation_tag(), "volume:factor=0.5>white_noise:snr_db=15");
  const fs::path p = fs::temp_directory_path() / "cladlab_unit_scores.jsonl";
  write_scores({clean, one, two}, p);
  EXPECT_EQ(read_scores(p), (std::vector<ScoreRecord>{clean, one, two}));
  {
    std::ofstream out(p, std::ios::app);
    out << "{not json}\n";
  }
  try {
    read_scores(p);
    FAIL() << "expected ParseError";
  } catch (const ParseError& e) {
    EXPECT_EQ(e.line(), 4u);
  }
}

TEST(ScoreDataset, OneRecordPerSample) {
  const Dataset d = small_dataset(20, 400, 9);
  Classifier c(std::make_unique<TinyEncoder>(small_encoder(400), 15), 16);
  const auto records = score_dataset(c, d, 7);
  ASSERT_EQ(records.size(), d.size());
  const auto direct = score_batch(c, waves(d, d.size()));
  for (std::size_t i = 0; i < d.size(); ++i) {
    EXPECT_EQ(records[i].sample_id, d[i].id);
    EXPECT_EQ(records[i].label, d[i].label);
    EXPECT_FALSE(records[i].manipulation.has_value());
    EXPECT_NEAR(records[i].p, direct[i], 1e-6);
  }
}

}  // namespace
}  // namespace cladlab
