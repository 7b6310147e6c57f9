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

#include "cladlab/experiment.hpp"

#include <algorithm>
#include <cstdlib>
#include <fstream>
#include <iomanip>
#include <map>
#include <ostream>
#include <set>

#include "cladlab/checkpoint.hpp"
#include "cladlab/errors.hpp"
#include "cladlab/plots.hpp"

namespace cladlab {
namespace fs = std::filesystem;

namespace {

void write_json_file(const nlohmann::json& j, const fs::path& file) {
  std::ofstream out(file, std::ios::binary);
  if (!out) throw IoError("cannot open '" + file.string() + "' for writing");
  out << j.dump(2) << '\n';
  if (!out) throw IoError("failed writing '" + file.string() + "'");
}

nlohmann::json read_json_file(const fs::path& file) {
  std::ifstream in(file, std::ios::binary);
  if (!in) throw IoError("cannot open '" + file.string() + "'");
  try {
    return nlohmann::json::parse(in);
  } catch (const nlohmann::json::parse_error& e) {
    throw FormatError("'" + file.string() + "': " + e.what());
  }
}

template <typename T>
void write_jsonl(const std::vector<T>& rows, const fs::path& file) {
  std::ofstream out(file, std::ios::binary);
  if (!out) throw IoError("cannot open '" + file.string() + "' for writing");
  for (const T& r : rows) out << nlohmann::json(r).dump() << '\n';
  if (!out) throw IoError("failed writing '" + file.string() + "'");
}

std::vector<nlohmann::json> specs_to_json(const std::vector<ManipulationSpec>& specs) {
  std::vector<nlohmann::json> out;
  for (const ManipulationSpec& s : specs) out.emplace_back(s.tag());
  return out;
}

std::vector<ManipulationSpec> specs_from_json(const nlohmann::json& j) {
  std::vector<ManipulationSpec> out;
  for (const auto& e : j) {
    out.push_back(e.is_string() ? ManipulationSpec::parse(e.get<std::string>()) : e.get<ManipulationSpec>());
  }
  return out;
}

const std::set<std::string> kConfigKeys = {
    "dataset", "encoder",         "training", "variant",   "augmentation",
    "eval_grid", "eval",          "combined_matrix", "matrix_specs", "leave_one_out",
    "leave_one_out_families",     "noise_dir", "noise_seed", "seeds", "output_dir"};

double mean_of(const std::vector<double>& v) {
  if (v.empty()) return 0.0;
  double s = 0.0;
  for (double x : v) s += x;
  return s / static_cast<double>(v.size());
}

// Cells of several per-seed reports, averaged in the order of the first one.
nlohmann::json aggregate_cells(const std::vector<nlohmann::json>& reports) {
  std::vector<std::string> order;
  std::map<std::string, std::vector<nlohmann::json>> by_tag;
  for (const auto& rep : reports) {
    for (const auto& cell : rep.at("cells")) {
      std::string key = cell.at("manipulation").get<std::string>();
      if (cell.contains("row")) {
        key = std::to_string(cell.at("row").get<std::size_t>()) + "," +
              std::to_string(cell.at("col").get<std::size_t>()) + ":" + key;
      }
      if (!by_tag.contains(key)) order.push_back(key);
      by_tag[key].push_back(cell);
    }
  }
  nlohmann::json out = nlohmann::json::array();
  for (const std::string& key : order) {
    const auto& cells = by_tag[key];
    std::vector<double> fars;
    std::vector<double> frrs;
    std::vector<double> f1s;
    for (const auto& c : cells) {
      fars.push_back(c.at("far").get<double>());
      frrs.push_back(c.at("frr").get<double>());
      f1s.push_back(c.at("f1").get<double>());
    }
    nlohmann::json row{{"manipulation", cells.front().at("manipulation")},
                       {"mean_far", mean_of(fars)},
                       {"far_per_seed", fars},
                       {"mean_frr", mean_of(frrs)},
                       {"mean_f1", mean_of(f1s)}};
    if (cells.front().contains("row")) {
      row["row"] = cells.front().at("row");
      row["col"] = cells.front().at("col");
    }
    out.push_back(std::move(row));
  }
  return out;
}

nlohmann::json aggregate_reports(const std::vector<nlohmann::json>& reports) {
  std::vector<double> eers;
  for (const auto& r : reports) eers.push_back(r.at("clean_eer").get<double>());
  nlohmann::json out{{"clean_eer", {{"mean", mean_of(eers)}, {"per_seed", eers}}},
                     {"cells", aggregate_cells(reports)}};
  if (!reports.empty()) out["matrix_size"] = reports.front().value("matrix_size", std::size_t{0});
  return out;
}

std::optional<std::uint64_t> seed_of_dir(const fs::path& p) {
  const std::string name = p.filename().string();
  if (name.rfind("seed_", 0) != 0 || name.size() == 5) return std::nullopt;
  std::uint64_t v = 0;
  for (char c : name.substr(5)) {
    if (c < '0' || c > '9') return std::nullopt;
    v = v * 10 + static_cast<std::uint64_t>(c - '0');
  }
  return v;
}

void write_summary_csv(const nlohmann::json& summary, const fs::path& file) {
  std::ofstream out(file, std::ios::binary);
  if (!out) throw IoError("cannot open '" + file.string() + "' for writing");
  out << std::setprecision(17);
  const auto& seeds = summary.at("seeds");
  out << "manipulation,mean_far";
  for (const auto& s : seeds) out << ",far_seed_" << s.get<std::uint64_t>();
  out << '\n';
  if (summary.contains("sweep")) {
    out << "\"clean_eer\"," << summary["sweep"]["clean_eer"]["mean"].get<double>();
    for (const auto& v : summary["sweep"]["clean_eer"]["per_seed"]) out << ',' << v.get<double>();
    out << '\n';
    for (const auto& c : summary["sweep"]["cells"]) {
      out << '"' << c.at("manipulation").get<std::string>() << "\"," << c.at("mean_far").get<double>();
      for (const auto& v : c.at("far_per_seed")) out << ',' << v.get<double>();
      out << '\n';
    }
  }
  if (!out) throw IoError("failed writing '" + file.string() + "'");
}

}  // namespace

// --- Configuration ------------------------------------------------------------

void ExperimentConfig::validate() const {
  if (dataset.synthetic.has_value() == dataset.protocol_dir.has_value()) {
    throw ArgumentError("dataset: give exactly one of 'synthetic' or 'protocol_dir'");
  }
  if (dataset.synthetic) dataset.synthetic->validate();
  TinyEncoderConfig enc = encoder;
  enc.input_len = training.input_len;
  enc.validate();
  training.validate();
  augmentation.validate();
  for (const ManipulationSpec& s : eval_grid) s.validate();
  for (const ManipulationSpec& s : matrix_specs) s.validate();
  if (eval.batch == 0) throw ArgumentError("eval.batch must be positive");
  if (leave_one_out && leave_one_out_families.size() < 2) {
    throw ArgumentError("leave_one_out_families needs at least two families");
  }
  if (seeds.empty()) throw ArgumentError("seeds must not be empty");
  if (std::set<std::uint64_t>(seeds.begin(), seeds.end()).size() != seeds.size()) {
    throw ArgumentError("seeds must be distinct");
  }
  if (output_dir.empty()) throw ArgumentError("output_dir must not be empty");
}

void to_json(nlohmann::json& j, const DatasetSource& d) {
  j = nlohmann::json::object();
  if (d.synthetic) j["synthetic"] = *d.synthetic;
  if (d.protocol_dir) j["protocol_dir"] = d.protocol_dir->string();
}

void from_json(const nlohmann::json& j, DatasetSource& d) {
  d = DatasetSource{};
  if (j.contains("synthetic")) d.synthetic = j.at("synthetic").get<SynthConfig>();
  if (j.contains("protocol_dir")) d.protocol_dir = fs::path(j.at("protocol_dir").get<std::string>());
}

void to_json(nlohmann::json& j, const ExperimentConfig& c) {
  std::vector<std::string> families;
  for (Family f : c.leave_one_out_families) families.emplace_back(to_string(f));
  j = nlohmann::json{{"dataset", c.dataset},
                     {"encoder", c.encoder},
                     {"training", c.training},
                     {"variant", c.variant},
                     {"augmentation", c.augmentation},
                     {"eval_grid", specs_to_json(c.eval_grid)},
                     {"eval", c.eval},
                     {"combined_matrix", c.combined_matrix},
                     {"matrix_specs", specs_to_json(c.matrix_specs)},
                     {"leave_one_out", c.leave_one_out},
                     {"leave_one_out_families", families},
                     {"noise_seed", c.noise_seed},
                     {"seeds", c.seeds},
                     {"output_dir", c.output_dir.string()}};
  if (c.noise_dir) j["noise_dir"] = c.noise_dir->string();
}

void from_json(const nlohmann::json& j, ExperimentConfig& c) {
  if (!j.is_object()) throw FormatError("experiment config must be a JSON object");
  for (const auto& [key, value] : j.items()) {
    if (!kConfigKeys.contains(key)) throw FormatError("unknown experiment config key '" + key + "'");
  }
  ExperimentConfig d;
  c = d;
  if (j.contains("dataset")) c.dataset = j.at("dataset").get<DatasetSource>();
  if (j.contains("encoder")) c.encoder = j.at("encoder").get<TinyEncoderConfig>();
  if (j.contains("training")) c.training = j.at("training").get<TrainingConfig>();
  if (j.contains("variant")) c.variant = j.at("variant").get<VariantConfig>();
  if (j.contains("augmentation")) c.augmentation = j.at("augmentation").get<AugmentationPolicy>();
  if (j.contains("eval_grid")) c.eval_grid = specs_from_json(j.at("eval_grid"));
  if (j.contains("eval")) c.eval = j.at("eval").get<EvalConfig>();
  c.combined_matrix = j.value("combined_matrix", d.combined_matrix);
  if (j.contains("matrix_specs")) c.matrix_specs = specs_from_json(j.at("matrix_specs"));
  c.leave_one_out = j.value("leave_one_out", d.leave_one_out);
  if (j.contains("leave_one_out_families")) {
    c.leave_one_out_families.clear();
    for (const auto& f : j.at("leave_one_out_families")) {
      c.leave_one_out_families.push_back(parse_family(f.get<std::string>()));
    }
  }
  if (j.contains("noise_dir")) c.noise_dir = fs::path(j.at("noise_dir").get<std::string>());
  c.noise_seed = j.value("noise_seed", d.noise_seed);
  if (j.contains("seeds")) c.seeds = j.at("seeds").get<std::vector<std::uint64_t>>();
  if (j.contains("output_dir")) c.output_dir = j.at("output_dir").get<std::string>();
}

ExperimentConfig load_experiment_config(const fs::path& file) {
  const nlohmann::json j = read_json_file(file);
  try {
    return j.get<ExperimentConfig>();
  } catch (const nlohmann::json::exception& e) {
    throw FormatError("'" + file.string() + "': " + e.what());
  }
}

void save_experiment_config(const ExperimentConfig& cfg, const fs::path& file) {
  write_json_file(nlohmann::json(cfg), file);
}

fs::path resolve_output_path(const fs::path& p) {
  const char* root = std::getenv(kOutputRootEnv);
  if (root == nullptr || *root == '\0' || p.is_absolute()) return p;
  return fs::path(root) / p;
}

SynthSplit load_datasets(const DatasetSource& source) {
  if (source.synthetic) return generate_synthetic(*source.synthetic);
  if (!source.protocol_dir) throw ArgumentError("dataset source is empty");
  SynthSplit split;
  split.train = parse_protocol(*source.protocol_dir / "train");
  split.eval = parse_protocol(*source.protocol_dir / "eval");
  return split;
}

NoiseBank make_noise_bank(const ExperimentConfig& cfg) {
  if (cfg.noise_dir) return NoiseBank::load_directory(*cfg.noise_dir);
  const int rate = cfg.dataset.synthetic ? cfg.dataset.synthetic->sample_rate_hz : kDefaultSampleRateHz;
  return NoiseBank::synthetic(cfg.noise_seed, rate, 5 * static_cast<std::size_t>(rate));
}

std::vector<ManipulationSpec> resolve_eval_grid(const ExperimentConfig& cfg, const NoiseBank& bank) {
  return cfg.eval_grid.empty() ? default_eval_grid(bank) : cfg.eval_grid;
}

std::vector<ManipulationSpec> resolve_matrix_specs(const ExperimentConfig& cfg) {
  return cfg.matrix_specs.empty() ? representative_specs() : cfg.matrix_specs;
}

void to_json(nlohmann::json& j, const FailureRecord& f) {
  j = nlohmann::json{{"status", "failed"}, {"stage", f.stage}, {"category", f.category}, {"message", f.message}};
  j["seed"] = f.seed ? nlohmann::json(*f.seed) : nlohmann::json(nullptr);
}

bool RunSummary::ok() const {
  return std::none_of(seeds.begin(), seeds.end(), [](const SeedOutcome& s) { return s.failure.has_value(); });
}

// --- Outputs ------------------------------------------------------------------

void write_model_outputs(const TrainedModel& model, const fs::path& dir) {
  fs::create_directories(dir);
  make_checkpoint(*model.classifier, model.finetune.steps).save(dir / "classifier.ckpt");
  write_jsonl(model.pretrain_log, dir / "pretrain_log.jsonl");
  write_jsonl(model.finetune.log, dir / "finetune_log.jsonl");
}

void write_eval_outputs(const EvalReport& report, const fs::path& dir, const std::string& stem) {
  fs::create_directories(dir);
  write_json_file(report_summary(report), dir / (stem + ".json"));
  write_report_jsonl(report, dir / (stem + ".jsonl"));
  write_report_csv(report, dir / (stem + ".csv"));
  write_report_scores(report, dir / (stem + "_scores.jsonl"));
  write_det_csv(report.det, dir / (stem + "_det.csv"));

  ScoreSet clean;
  for (const ScoreRecord& r : report.real_scores) clean.real_scores.push_back(r.p);
  for (const ScoreRecord& r : report.clean_fake_scores) clean.fake_scores.push_back(r.p);
  std::vector<DetCurve> curves{{"clean", report.det}};
  if (report.matrix_size == 0) {
    // Worst cell by FAR alongside the clean curve.
    const auto worst = std::max_element(report.cells.begin(), report.cells.end(),
                                        [](const CellRecord& a, const CellRecord& b) { return a.far < b.far; });
    if (worst != report.cells.end()) {
      ScoreSet attacked{clean.real_scores, {}};
      for (const ScoreRecord& r : worst->fake_scores) attacked.fake_scores.push_back(r.p);
      curves.push_back({worst->tag(), det_points(attacked)});
    }
  }
  write_det_svg(curves, dir / (stem + "_det.svg"));
  const Histogram h = score_histogram(clean);
  write_histogram_csv(h, dir / (stem + "_hist.csv"));
  write_histogram_svg(h, dir / (stem + "_hist.svg"));
}

nlohmann::json summarize_output(const fs::path& output_dir) {
  if (!fs::is_directory(output_dir)) throw IoError("'" + output_dir.string() + "' is not a directory");
  std::vector<std::pair<std::uint64_t, fs::path>> dirs;
  for (const auto& entry : fs::directory_iterator(output_dir)) {
    if (!entry.is_directory()) continue;
    if (auto s = seed_of_dir(entry.path())) dirs.emplace_back(*s, entry.path());
  }
  std::sort(dirs.begin(), dirs.end());

  std::vector<std::uint64_t> ok_seeds;
  nlohmann::json failures = nlohmann::json::array();
  std::vector<nlohmann::json> sweeps;
  std::vector<nlohmann::json> matrices;
  std::map<std::string, std::vector<nlohmann::json>> loo;
  for (const auto& [seed, dir] : dirs) {
    if (fs::exists(dir / "failure.json")) {
      failures.push_back(read_json_file(dir / "failure.json"));
      continue;
    }
    if (!fs::exists(dir / "report.json")) continue;
    ok_seeds.push_back(seed);
    sweeps.push_back(read_json_file(dir / "report.json"));
    if (fs::exists(dir / "matrix.json")) matrices.push_back(read_json_file(dir / "matrix.json"));
    if (fs::is_directory(dir / "leave_one_out")) {
      std::vector<fs::path> files;
      for (const auto& e : fs::directory_iterator(dir / "leave_one_out")) {
        if (e.is_directory() && fs::exists(e.path() / "report.json")) files.push_back(e.path());
      }
      std::sort(files.begin(), files.end());
      for (const fs::path& f : files) loo[f.filename().string()].push_back(read_json_file(f / "report.json"));
    }
  }

  nlohmann::json summary{{"seeds", ok_seeds}, {"failures", failures}};
  if (!sweeps.empty()) summary["sweep"] = aggregate_reports(sweeps);
  if (!matrices.empty()) summary["matrix"] = aggregate_reports(matrices);
  if (!loo.empty()) {
    nlohmann::json l = nlohmann::json::object();
    for (const auto& [family, reports] : loo) l[family] = aggregate_reports(reports);
    summary["leave_one_out"] = std::move(l);
  }
  write_json_file(summary, output_dir / "summary.json");
  write_summary_csv(summary, output_dir / "summary.csv");
  return summary;
}

RunSummary run_experiment(const ExperimentConfig& cfg, const RunOptions& options) {
  cfg.validate();
  RunSummary run;
  run.output_dir = resolve_output_path(cfg.output_dir);
  fs::create_directories(run.output_dir);
  save_experiment_config(cfg, run.output_dir / "config.json");

  std::ostream* log = options.log;
  const SynthSplit data = load_datasets(cfg.dataset);
  const NoiseBank bank = make_noise_bank(cfg);
  const std::vector<ManipulationSpec> grid = resolve_eval_grid(cfg, bank);
  for (const ManipulationSpec& s : grid) s.validate();

  for (std::uint64_t seed : cfg.seeds) {
    SeedOutcome outcome;
    outcome.seed = seed;
    outcome.dir = run.output_dir / ("seed_" + std::to_string(seed));
    fs::create_directories(outcome.dir);
    fs::remove(outcome.dir / "failure.json");
    fs::remove(outcome.dir / "report.json");
    std::string stage = "train";
    try {
      TrainHooks hooks;
      if (log != nullptr) {
        hooks.on_pretrain_step = [log, seed](const StepRecord& r) {
          if (r.step % 50 == 0) {
            *log << "[seed " << seed << "] pretrain epoch " << r.epoch << " step " << r.step
                 << " loss " << r.loss.total << " (contrastive " << r.loss.contrastive << ", length "
                 << r.loss.length << ")\n";
          }
        };
        hooks.on_finetune_step = [log, seed](const FinetuneStep& r) {
          if (r.step % 50 == 0) {
            *log << "[seed " << seed << "] finetune epoch " << r.epoch << " step " << r.step << " loss "
                 << r.loss << "\n";
          }
        };
      }
      TrainedModel model = train_variant(data.train, cfg.encoder, cfg.training, cfg.variant,
                                         cfg.augmentation, bank, seed, hooks);
      write_model_outputs(model, outcome.dir);

      stage = "eval";
      const EvalReport sweep = attack_sweep(*model.classifier, data.eval, grid, bank, cfg.eval);
      if (log != nullptr) *log << "[seed " << seed << "] clean EER " << sweep.clean_eer << "\n";

      if (cfg.combined_matrix) {
        stage = "attack-matrix";
        const EvalReport matrix = combined_attack_matrix(*model.classifier, data.eval,
                                                         resolve_matrix_specs(cfg), bank, cfg.eval);
        write_eval_outputs(matrix, outcome.dir, "matrix");
      }
      if (cfg.leave_one_out) {
        stage = "leave-one-out";
        LeaveOneOutConfig lcfg{cfg.encoder, cfg.training, cfg.augmentation, cfg.eval, seed, {}};
        const auto reports = leave_one_out_study(data.train, data.eval, lcfg, cfg.leave_one_out_families,
                                                 bank, hooks);
        for (const LeaveOneOutReport& r : reports) {
          write_eval_outputs(r.report, outcome.dir / "leave_one_out" / std::string(to_string(r.excluded)),
                             "report");
        }
      }
      // report.json last: its presence marks a completed seed.
      write_eval_outputs(sweep, outcome.dir, "report");
    } catch (const std::exception& e) {
      const auto* err = dynamic_cast<const Error*>(&e);
      FailureRecord f{seed, stage, err != nullptr ? err->category() : "error", e.what()};
      write_json_file(nlohmann::json(f), outcome.dir / "failure.json");
      if (log != nullptr) *log << "[seed " << seed << "] failed in " << stage << ": " << e.what() << "\n";
      outcome.failure = std::move(f);
    }
    run.seeds.push_back(std::move(outcome));
  }
  run.table = summarize_output(run.output_dir);
  return run;
}

ManipulateResult manipulate_file(const fs::path& in, const ManipulationSpec& spec, const fs::path& out,
                                 std::uint64_t seed, const NoiseBank& bank) {
  spec.validate();
  const Waveform w = read_wav(in);
  write_wav(apply(spec, w, bank, seed), out);
  ManipulateResult result;
  const Family f = spec.family();
  if (f == Family::kWhiteNoise || f == Family::kEnvNoise) {
    const Waveform written = read_wav(out);
    if (written.size() != w.size()) throw ConsistencyError("manipulated file changed length");
    std::vector<double> noise(w.size());
    for (std::size_t i = 0; i < w.size(); ++i) noise[i] = written.samples[i] - w.samples[i];
    result.achieved_snr_db = snr_db(measure_power(w).mean_square_power, measure_power(noise).mean_square_power);
  }
  return result;
}

}  // namespace cladlab
