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
#include <string>
#include <vector>

#include <gtest/gtest.h>
#include <nlohmann/json.hpp>

#include "cladlab/errors.hpp"
#include "cladlab/evaluation.hpp"
#include "cladlab/losses.hpp"

namespace cladlab {
namespace {

namespace fs = std::filesystem;

constexpr std::size_t kLen = 2000;

TinyEncoderConfig small_encoder() {
  TinyEncoderConfig c;
  c.input_len = kLen;
  c.channels = {8, 16};
  c.feature_dim = 16;
  return c;
}

Dataset eval_set() {
  SynthConfig s;
  s.n_train = 10;
  s.n_eval = 40;
  s.real_fraction = 0.25;
  s.duration_samples = kLen;
  s.seed = 21;
  return generate_synthetic(s).eval;
}

class Evaluation : public ::testing::Test {
 protected:
  Evaluation() : classifier_(std::make_unique<TinyEncoder>(small_encoder(), 1), 2), data_(eval_set()) {
    // Put the running statistics on the data scale so scores spread out.
    std::vector<Waveform> batch;
    for (const auto& s : data_) batch.push_back(s.audio);
    classifier_.encoder().forward(batch, ForwardMode::kTraining);
  }
  Classifier classifier_;
  Dataset data_;
  NoiseBank bank_ = NoiseBank::synthetic(0);
  EvalConfig cfg_;
};

std::vector<double> fake_values(const CellRecord& c) {
  std::vector<double> out;
  for (const auto& r : c.fake_scores) out.push_back(r.p);
  return out;
}

TEST_F(Evaluation, IdentityCellReproducesCleanThreshold) {
  const EvalReport r = attack_sweep(classifier_, data_, {ManipulationSpec{}}, bank_, cfg_);
  ASSERT_EQ(r.cells.size(), 1u);
  EXPECT_EQ(r.threshold.source, ThresholdSource::kEerOnClean);
  EXPECT_EQ(r.cells[0].far, r.clean_far);
  EXPECT_EQ(r.cells[0].frr, r.clean_frr);
  std::vector<double> reals;
  for (const auto& s : r.real_scores) reals.push_back(s.p);
  std::vector<double> fakes;
  for (const auto& s : r.clean_fake_scores) fakes.push_back(s.p);
  const EerResult e = eer({reals, fakes});
  EXPECT_EQ(r.clean_eer, e.eer);
  EXPECT_LE(std::abs(r.cells[0].far - r.clean_eer), e.step_bound + 1e-12);
  EXPECT_EQ(fake_values(r.cells[0]), fakes);
}

TEST_F(Evaluation, SweepManipulatesOnlyFakes) {
  const std::vector<ManipulationSpec> grid{VolumeParams{0.1}, FadeParams{0.5, FadeShape::kHalfSine},
                                           WhiteNoiseParams{15.0}, TimeStretchParams{0.9, 128},
                                           ResampleParams{17000}};
  const EvalReport r = attack_sweep(classifier_, data_, grid, bank_, cfg_);
  ASSERT_EQ(r.cells.size(), grid.size());
  const ClassCounts counts = count_classes(data_);
  EXPECT_EQ(r.real_scores.size(), counts.real);
  EXPECT_EQ(r.clean_fake_scores.size(), counts.fake);
  for (std::size_t i = 0; i < grid.size(); ++i) {
    const CellRecord& c = r.cells[i];
    EXPECT_GE(c.far, 0.0);
    EXPECT_LE(c.far, 1.0);
    EXPECT_GE(c.f1, 0.0);
    EXPECT_LE(c.f1, 1.0);
    EXPECT_EQ(c.frr, r.clean_frr);
    EXPECT_EQ(c.n_real, counts.real);
    EXPECT_EQ(c.n_fake, counts.fake);
    EXPECT_EQ(c.manipulations, std::vector<ManipulationSpec>{grid[i]});
    ASSERT_EQ(c.fake_scores.size(), counts.fake);
    for (const auto& s : c.fake_scores) {
      EXPECT_EQ(s.label, kFake);
      ASSERT_TRUE(s.manipulation.has_value());
      EXPECT_EQ(*s.manipulation, std::vector<ManipulationSpec>{grid[i]});
    }
  }
  // Rerunning gives identical reports.
  const EvalReport again = attack_sweep(classifier_, data_, grid, bank_, cfg_);
  for (std::size_t i = 0; i < grid.size(); ++i) EXPECT_EQ(fake_values(again.cells[i]), fake_values(r.cells[i]));
}

TEST_F(Evaluation, RequiresBothClasses) {
  Dataset fakes_only;
  for (const auto& s : data_) {
    if (s.label == kFake) fakes_only.push_back(s);
  }
  EXPECT_THROW(attack_sweep(classifier_, fakes_only, {ManipulationSpec{}}, bank_, cfg_), ArgumentError);
}

TEST_F(Evaluation, MatrixDiagonalEqualsSweep) {
  const auto specs = representative_specs();
  const EvalReport m = combined_attack_matrix(classifier_, data_, specs, bank_, cfg_);
  ASSERT_EQ(m.matrix_size, 6u);
  ASSERT_EQ(m.cells.size(), 36u);
  const EvalReport s = attack_sweep(classifier_, data_, specs, bank_, cfg_);
  EXPECT_EQ(m.threshold.value, s.threshold.value);
  for (std::size_t i = 0; i < 6; ++i) {
    EXPECT_EQ(m.cell(i, i).far, s.cells[i].far) << specs[i].tag();
    EXPECT_EQ(fake_values(m.cell(i, i)), fake_values(s.cells[i])) << specs[i].tag();
    for (std::size_t j = 0; j < 6; ++j) {
      if (i == j) continue;
      EXPECT_EQ(m.cell(i, j).manipulations, (std::vector<ManipulationSpec>{specs[i], specs[j]}));
    }
  }
}

TEST_F(Evaluation, MatrixOffDiagonalComposesInOrder) {
  const std::vector<ManipulationSpec> specs{VolumeParams{0.5}, TimeShiftParams{100}};
  const EvalReport m = combined_attack_matrix(classifier_, data_, specs, bank_, cfg_);
  // Volume and circular shift commute exactly, so (0,1) and (1,0) agree.
  EXPECT_EQ(fake_values(m.cell(0, 1)), fake_values(m.cell(1, 0)));
  const EvalReport sweep = attack_sweep(classifier_, data_, {ManipulationSpec{}}, bank_, cfg_);
  EXPECT_EQ(m.clean_eer, sweep.clean_eer);
}

TEST_F(Evaluation, ComposeTwiceDiagonal) {
  EvalConfig twice = cfg_;
  twice.diagonal = DiagonalMode::kComposeTwice;
  const EvalReport m = combined_attack_matrix(classifier_, data_, {VolumeParams{0.5}}, bank_, twice);
  ASSERT_EQ(m.cells.size(), 1u);
  EXPECT_EQ(m.cells[0].manipulations, (std::vector<ManipulationSpec>{VolumeParams{0.5}, VolumeParams{0.5}}));
  const EvalReport quarter = attack_sweep(classifier_, data_, {VolumeParams{0.25}}, bank_, cfg_);
  EXPECT_EQ(fake_values(m.cells[0]), fake_values(quarter.cells[0]));
  const EvalReport id = combined_attack_matrix(classifier_, data_, {ManipulationSpec{}}, bank_, twice);
  EXPECT_EQ(id.cells[0].far, id.clean_far);
}

TEST_F(Evaluation, Serialization) {
  const std::vector<ManipulationSpec> grid{ManipulationSpec{}, FadeParams{0.5, FadeShape::kHalfSine}};
  const EvalReport r = attack_sweep(classifier_, data_, grid, bank_, cfg_);
  const nlohmann::json j = report_summary(r);
  EXPECT_EQ(j["kind"], "sweep");
  EXPECT_EQ(j["cells"].size(), 2u);
  EXPECT_EQ(j["cells"][1]["manipulation"], "fade:ratio=0.5,shape=half_sine");

  const fs::path dir = fs::temp_directory_path() / "cladlab_unit_eval";
  fs::create_directories(dir);
  auto lines = [](const fs::path& p) {
    std::ifstream in(p);
    std::vector<std::string> out;
    for (std::string l; std::getline(in, l);) out.push_back(l);
    return out;
  };
  write_report_jsonl(r, dir / "r.jsonl");
  const auto jl = lines(dir / "r.jsonl");
  ASSERT_EQ(jl.size(), 3u);
  for (const auto& l : jl) EXPECT_NO_THROW((void)nlohmann::json::parse(l));
  write_report_csv(r, dir / "r.csv");
  const auto csv = lines(dir / "r.csv");
  ASSERT_EQ(csv.size(), 3u);
  EXPECT_EQ(csv[0], "manipulation,far,frr,f1,n_real,n_fake");
  write_det_csv(r.det, dir / "det.csv");
  const auto det = lines(dir / "det.csv");
  EXPECT_EQ(det.size(), r.det.size() + 1);
  EXPECT_EQ(det[0], "far,frr");
  write_report_scores(r, dir / "scores.jsonl");
  const auto scores = read_scores(dir / "scores.jsonl");
  EXPECT_EQ(scores.size(), r.real_scores.size() + r.clean_fake_scores.size() * 3);
}

TEST(EvalConfigJson, RoundTrip) {
  EvalConfig c;
  c.batch = 32;
  c.seed = 9;
  c.f1_positive = F1Positive::kFake;
  c.diagonal = DiagonalMode::kComposeTwice;
  const auto back = nlohmann::json(c).get<EvalConfig>();
  EXPECT_EQ(back.batch, 32u);
  EXPECT_EQ(back.seed, 9u);
  EXPECT_EQ(back.f1_positive, F1Positive::kFake);
  EXPECT_EQ(back.diagonal, DiagonalMode::kComposeTwice);
}

TEST(LeaveOneOut, OneModelPerFamily) {
  SynthConfig s;
  s.n_train = 24;
  s.n_eval = 20;
  s.real_fraction = 0.25;
  s.duration_samples = 1000;
  const SynthSplit split = generate_synthetic(s);
  LeaveOneOutConfig cfg;
  cfg.encoder = small_encoder();
  cfg.encoder.input_len = 1000;
  cfg.training.input_len = 1000;
  cfg.training.pretrain_epochs = 1;
  cfg.training.downstream_epochs = 1;
  cfg.training.pretrain_batch = 8;
  cfg.training.queue_size = 32;
  const std::vector<Family> families{Family::kVolume, Family::kFade};
  const NoiseBank bank = NoiseBank::synthetic(0);
  const auto reports = leave_one_out_study(split.train, split.eval, cfg, families, bank);
  ASSERT_EQ(reports.size(), 2u);
  for (std::size_t k = 0; k < 2; ++k) {
    EXPECT_EQ(reports[k].excluded, families[k]);
    ASSERT_EQ(reports[k].report.cells.size(), 2u);
    EXPECT_EQ(reports[k].report.cells[0].manipulations[0].family(), Family::kVolume);
    EXPECT_EQ(reports[k].report.cells[1].manipulations[0].family(), Family::kFade);
  }
  EXPECT_THROW(leave_one_out_study(split.train, split.eval, cfg, std::vector<Family>{Family::kVolume}, bank),
               ArgumentError);
}

}  // namespace
}  // namespace cladlab
