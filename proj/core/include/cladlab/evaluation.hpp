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
#include <span>
#include <string>
#include <vector>

#include <nlohmann/json_fwd.hpp>

#include "cladlab/dataset.hpp"
#include "cladlab/downstream.hpp"
#include "cladlab/manipulations.hpp"
#include "cladlab/metrics.hpp"

namespace cladlab {

// How cell (i, i) of the combined-attack matrix is produced.
enum class DiagonalMode {
  kSingle,        // apply(specs[i]) once: the single-manipulation result
  kComposeTwice,  // compose({specs[i], specs[i]})
};

struct EvalConfig {
  std::size_t batch = 64;
  // Manipulation randomness for eval sample i comes from derive_seed(seed, {i}).
  std::uint64_t seed = 0;
  F1Positive f1_positive = F1Positive::kReal;
  DiagonalMode diagonal = DiagonalMode::kSingle;
};

void to_json(nlohmann::json& j, const EvalConfig& c);
void from_json(const nlohmann::json& j, EvalConfig& c);

struct CellRecord {
  std::vector<ManipulationSpec> manipulations;  // applied in order; empty = clean
  double far = 0.0;
  double frr = 0.0;
  double f1 = 0.0;
  std::size_t n_real = 0;
  std::size_t n_fake = 0;
  std::vector<ScoreRecord> fake_scores;

  std::string tag() const;
};

struct EvalReport {
  std::string kind;  // "sweep" or "matrix"
  double clean_eer = 0.0;
  Threshold threshold;
  double clean_far = 0.0;
  double clean_frr = 0.0;
  std::vector<ScoreRecord> real_scores;        // shared by every cell
  std::vector<ScoreRecord> clean_fake_scores;
  std::vector<DetPoint> det;                   // clean DET curve
  std::vector<CellRecord> cells;
  std::size_t matrix_size = 0;                 // cells[i * matrix_size + j] for matrices

  const CellRecord& cell(std::size_t i, std::size_t j) const;
};

// Clean scoring, threshold at the clean EER, then one cell per grid spec with
// only the fakes manipulated (fix_length after manipulation).
EvalReport attack_sweep(Classifier& classifier, const Dataset& eval_set,
                        const std::vector<ManipulationSpec>& grid, const NoiseBank& bank,
                        const EvalConfig& cfg);

// |specs|^2 cells; cell (i, j) = compose({specs[i], specs[j]}) on the fakes.
EvalReport combined_attack_matrix(Classifier& classifier, const Dataset& eval_set,
                                  const std::vector<ManipulationSpec>& specs,
                                  const NoiseBank& bank, const EvalConfig& cfg);

// Per-cell JSON lines (scores omitted), a flat CSV table and the DET curve.
nlohmann::json report_summary(const EvalReport& report);
void write_report_jsonl(const EvalReport& report, const std::filesystem::path& file);
void write_report_csv(const EvalReport& report, const std::filesystem::path& file);
void write_det_csv(std::span<const DetPoint> det, const std::filesystem::path& file);
// Clean reals, clean fakes and every cell's fakes as one score file.
void write_report_scores(const EvalReport& report, const std::filesystem::path& file);

struct LeaveOneOutConfig {
  TinyEncoderConfig encoder;
  TrainingConfig training;
  AugmentationPolicy policy;
  EvalConfig eval;
  std::uint64_t seed = 0;
  // Evaluation grid; empty means representative_spec(f) for every studied family.
  std::vector<ManipulationSpec> grid;
};

struct LeaveOneOutReport {
  Family excluded = Family::kIdentity;
  EvalReport report;
};

// One CLAD model per family, trained with that family removed from the policy
// and evaluated on the full grid.
std::vector<LeaveOneOutReport> leave_one_out_study(const Dataset& train, const Dataset& eval_set,
                                                   const LeaveOneOutConfig& cfg,
                                                   std::span<const Family> families,
                                                   const NoiseBank& bank,
                                                   const TrainHooks& hooks = {});

}  // namespace cladlab
