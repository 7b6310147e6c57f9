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
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <string>
#include <vector>

#include <gtest/gtest.h>
#include <nlohmann/json.hpp>

#include "cladlab/errors.hpp"
#include "cladlab/experiment.hpp"
#include "oracles.hpp"

namespace cladlab {
namespace {

namespace fs = std::filesystem;

fs::path fresh_dir(const std::string& name) {
  const fs::path dir = fs::temp_directory_path() / "cladlab_unit_experiment" / name;
  fs::remove_all(dir);
  fs::create_directories(dir);
  return dir;
}

nlohmann::json read_json(const fs::path& p) {
  std::ifstream in(p);
  return nlohmann::json::parse(in);
}

ExperimentConfig tiny_config(const fs::path& out) {
  ExperimentConfig c;
  SynthConfig s;
  s.n_train = 32;
  s.n_eval = 20;
  s.real_fraction = 0.25;
  s.duration_samples = 1000;
  s.seed = 5;
  c.dataset.synthetic = s;
  c.encoder.channels = {4, 8};
  c.encoder.feature_dim = 8;
  c.training.input_len = 1000;
  c.training.queue_size = 32;
  c.training.pretrain_batch = 8;
  c.training.pretrain_epochs = 1;
  c.training.downstream_epochs = 1;
  c.eval_grid = {ManipulationSpec{}, VolumeParams{0.1}};
  c.seeds = {0, 1};
  c.output_dir = out;
  return c;
}

TEST(ExperimentConfig, JsonRoundTripAndUnknownKeys) {
  const fs::path dir = fresh_dir("config");
  ExperimentConfig c = tiny_config(dir / "out");
  c.variant = VariantConfig::cl();
  c.combined_matrix = true;
  save_experiment_config(c, dir / "c.json");
  const ExperimentConfig back = load_experiment_config(dir / "c.json");
  EXPECT_EQ(nlohmann::json(back), nlohmann::json(c));

  nlohmann::json j = c;
  j["surprise"] = 1;
  std::ofstream(dir / "bad.json") << j.dump();
  EXPECT_THROW(load_experiment_config(dir / "bad.json"), FormatError);
  std::ofstream(dir / "broken.json") << "{ not json";
  EXPECT_THROW(load_experiment_config(dir / "broken.json"), Error);
  EXPECT_THROW(load_experiment_config(dir / "absent.json"), IoError);
}

TEST(ExperimentConfig, Validation) {
  ExperimentConfig c = tiny_config("out");
  EXPECT_NO_THROW(c.validate());
  ExperimentConfig both = c;
  both.dataset.protocol_dir = "somewhere";
  EXPECT_THROW(both.validate(), ArgumentError);
  ExperimentConfig dup = c;
  dup.seeds = {1, 1};
  EXPECT_THROW(dup.validate(), ArgumentError);
  ExperimentConfig loo = c;
  loo.leave_one_out = true;
  loo.leave_one_out_families = {Family::kEcho};
  EXPECT_THROW(loo.validate(), ArgumentError);
}

TEST(OutputRoot, EnvironmentOverridesRelativePaths) {
  ::setenv(kOutputRootEnv, "/tmp/cladlab_root", 1);
  EXPECT_EQ(resolve_output_path("runs/x"), fs::path("/tmp/cladlab_root/runs/x"));
  EXPECT_EQ(resolve_output_path("/abs/y"), fs::path("/abs/y"));
  ::unsetenv(kOutputRootEnv);
  EXPECT_EQ(resolve_output_path("runs/x"), fs::path("runs/x"));
}

TEST(RunExperiment, WritesPerSeedTreeAndIsDeterministic) {
  const fs::path dir = fresh_dir("run");
  const ExperimentConfig c = tiny_config(dir / "a");
  const RunSummary a = run_experiment(c);
  ASSERT_TRUE(a.ok());
  for (const char* s : {"seed_0", "seed_1"}) {
    for (const char* f : {"classifier.ckpt", "pretrain_log.jsonl", "finetune_log.jsonl", "report.json",
                          "report.jsonl", "report.csv", "report_scores.jsonl", "report_det.csv",
                          "report_det.svg", "report_hist.csv", "report_hist.svg"}) {
      EXPECT_TRUE(fs::exists(a.output_dir / s / f)) << s << "/" << f;
    }
  }
  EXPECT_TRUE(fs::exists(a.output_dir / "summary.json"));
  EXPECT_TRUE(fs::exists(a.output_dir / "summary.csv"));
  EXPECT_TRUE(fs::exists(a.output_dir / "config.json"));
  const nlohmann::json summary = read_json(a.output_dir / "summary.json");
  EXPECT_EQ(summary["seeds"], nlohmann::json({0, 1}));
  EXPECT_EQ(summary["sweep"]["cells"].size(), 2u);

  ExperimentConfig again = c;
  again.output_dir = dir / "b";
  const RunSummary b = run_experiment(again);
  EXPECT_EQ(a.table, b.table);
  EXPECT_EQ(read_json(a.output_dir / "seed_1" / "report.json"), read_json(b.output_dir / "seed_1" / "report.json"));
  EXPECT_EQ(summarize_output(a.output_dir), a.table);
}

TEST(RunExperiment, VanillaSkipsPretraining) {
  const fs::path dir = fresh_dir("vanilla");
  ExperimentConfig c = tiny_config(dir / "out");
  c.variant = VariantConfig::vanilla();
  c.seeds = {3};
  const RunSummary r = run_experiment(c);
  ASSERT_TRUE(r.ok());
  std::ifstream log(r.output_dir / "seed_3" / "pretrain_log.jsonl");
  std::string line;
  EXPECT_FALSE(static_cast<bool>(std::getline(log, line)));
}

TEST(RunExperiment, FailingSeedsLeaveFailureRecords) {
  const fs::path dir = fresh_dir("fail");
  ExperimentConfig c = tiny_config(dir / "out");
  c.eval_grid = {EnvNoiseParams{20.0, "thunder"}};
  const RunSummary r = run_experiment(c);
  EXPECT_FALSE(r.ok());
  ASSERT_EQ(r.seeds.size(), 2u);
  for (const SeedOutcome& s : r.seeds) {
    ASSERT_TRUE(s.failure.has_value());
    EXPECT_EQ(s.failure->stage, "eval");
    EXPECT_EQ(s.failure->category, "lookup");
    const nlohmann::json f = read_json(s.dir / "failure.json");
    EXPECT_EQ(f["status"], "failed");
    EXPECT_EQ(f["stage"], "eval");
    EXPECT_EQ(f["category"], "lookup");
    EXPECT_EQ(f["seed"], s.seed);
    EXPECT_FALSE(fs::exists(s.dir / "report.json"));
    EXPECT_TRUE(fs::exists(s.dir / "classifier.ckpt"));
  }
  EXPECT_EQ(r.table["failures"].size(), 2u);
  EXPECT_TRUE(r.table["seeds"].empty());
}

TEST(ManipulateFile, IdentityVolumeAndNoise) {
  const fs::path dir = fresh_dir("manipulate");
  const NoiseBank bank = NoiseBank::synthetic(0);
  // Amplitude 0.5 keeps the noisy output clear of clipping.
  Waveform tone(oracle::tone(440.0, 16000.0, 16000, 0.5), 16000);
  write_wav(tone, dir / "in.wav");
  manipulate_file(dir / "in.wav", ManipulationSpec{}, dir / "id.wav", 0, bank);
  write_wav(read_wav(dir / "in.wav"), dir / "rt.wav");
  EXPECT_EQ(read_wav(dir / "id.wav"), read_wav(dir / "rt.wav"));

  manipulate_file(dir / "in.wav", VolumeParams{0.5}, dir / "half.wav", 0, bank);
  auto peak_int = [](const Waveform& w) {
    double p = 0.0;
    for (double x : w.samples) p = std::max(p, std::abs(x));
    return p * 32768.0;
  };
  EXPECT_NEAR(peak_int(read_wav(dir / "half.wav")), peak_int(read_wav(dir / "in.wav")) / 2.0, 1.0);

  const ManipulateResult r = manipulate_file(dir / "in.wav", WhiteNoiseParams{15.0}, dir / "wn.wav", 3, bank);
  ASSERT_TRUE(r.achieved_snr_db.has_value());
  EXPECT_NEAR(*r.achieved_snr_db, 15.0, 0.15);
  EXPECT_FALSE(manipulate_file(dir / "in.wav", VolumeParams{0.5}, dir / "v.wav", 0, bank).achieved_snr_db);
}

TEST(FailureRecord, Json) {
  const FailureRecord f{7, "train", "domain", "diverged"};
  const nlohmann::json j = f;
  EXPECT_EQ(j["status"], "failed");
  EXPECT_EQ(j["seed"], 7);
  EXPECT_EQ(j["stage"], "train");
  EXPECT_EQ(j["category"], "domain");
  EXPECT_EQ(j["message"], "diverged");
}

}  // namespace
}  // namespace cladlab
