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
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "cladlab/contrastive.hpp"
#include "cladlab/dataset.hpp"
#include "cladlab/downstream.hpp"
#include "cladlab/encoder.hpp"
#include "cladlab/evaluation.hpp"
#include "cladlab/manipulations.hpp"

namespace cladlab {

// Environment variable that, when set, roots every relative output path.
inline constexpr const char* kOutputRootEnv = "CLADLAB_OUTPUT_ROOT";

// Exactly one of the two sources. A protocol directory holds train/ and eval/
// subdirectories in the layout read by parse_protocol.
struct DatasetSource {
  std::optional<SynthConfig> synthetic;
  std::optional<std::filesystem::path> protocol_dir;
};

struct ExperimentConfig {
  DatasetSource dataset;
  TinyEncoderConfig encoder;
  TrainingConfig training;
  VariantConfig variant = VariantConfig::clad();
  AugmentationPolicy augmentation;
  std::vector<ManipulationSpec> eval_grid;  // empty: default_eval_grid(bank)
  EvalConfig eval;
  bool combined_matrix = false;
  std::vector<ManipulationSpec> matrix_specs;  // empty: representative_specs()
  bool leave_one_out = false;
  std::vector<Family> leave_one_out_families{kAttackFamilies.begin(), kAttackFamilies.end()};
  std::optional<std::filesystem::path> noise_dir;  // empty: synthetic bank
  std::uint64_t noise_seed = 0;
  std::vector<std::uint64_t> seeds{0};
  std::filesystem::path output_dir = "runs/default";

  void validate() const;
};

void to_json(nlohmann::json& j, const DatasetSource& d);
void from_json(const nlohmann::json& j, DatasetSource& d);
void to_json(nlohmann::json& j, const ExperimentConfig& c);
void from_json(const nlohmann::json& j, ExperimentConfig& c);

ExperimentConfig load_experiment_config(const std::filesystem::path& file);
void save_experiment_config(const ExperimentConfig& cfg, const std::filesystem::path& file);

// Relative paths are placed under $CLADLAB_OUTPUT_ROOT when it is set.
std::filesystem::path resolve_output_path(const std::filesystem::path& p);

SynthSplit load_datasets(const DatasetSource& source);
NoiseBank make_noise_bank(const ExperimentConfig& cfg);
std::vector<ManipulationSpec> resolve_eval_grid(const ExperimentConfig& cfg, const NoiseBank& bank);
std::vector<ManipulationSpec> resolve_matrix_specs(const ExperimentConfig& cfg);

// Machine-readable record of a failed stage.
struct FailureRecord {
  std::optional<std::uint64_t> seed;
  std::string stage;
  std::string category;
  std::string message;
};

void to_json(nlohmann::json& j, const FailureRecord& f);

struct SeedOutcome {
  std::uint64_t seed = 0;
  std::filesystem::path dir;
  std::optional<FailureRecord> failure;
};

struct RunSummary {
  std::filesystem::path output_dir;
  std::vector<SeedOutcome> seeds;
  nlohmann::json table;  // contents of summary.json

  bool ok() const;
};

struct RunOptions {
  std::ostream* log = nullptr;  // progress lines; nothing written to disk
};

// Per seed: optional pretraining, fine-tuning, the attack sweep and the
// optional matrix / leave-one-out studies, written under output_dir/seed_<s>/.
// A failing seed leaves failure.json and the remaining seeds still run.
// summary.json / summary.csv aggregate the mean FAR per cell.
RunSummary run_experiment(const ExperimentConfig& cfg, const RunOptions& options = {});

// Outputs of one trained model under dir.
void write_model_outputs(const TrainedModel& model, const std::filesystem::path& dir);
void write_eval_outputs(const EvalReport& report, const std::filesystem::path& dir,
                        const std::string& stem);

// Rebuilds summary.json / summary.csv from the seed_<s>/ reports under dir.
nlohmann::json summarize_output(const std::filesystem::path& output_dir);

struct ManipulateResult {
  std::optional<double> achieved_snr_db;  // noise families only, measured on the written file
};

ManipulateResult manipulate_file(const std::filesystem::path& in, const ManipulationSpec& spec,
                                 const std::filesystem::path& out, std::uint64_t seed,
                                 const NoiseBank& bank);

}  // namespace cladlab
