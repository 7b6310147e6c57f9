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

#include "cladlab/evaluation.hpp"

#include <fstream>
#include <functional>
#include <iomanip>

#include <nlohmann/json.hpp>

#include "cladlab/errors.hpp"
#include "cladlab/losses.hpp"
#include "cladlab/rng.hpp"

namespace cladlab {
namespace {

struct CleanPass {
  std::vector<ScoreRecord> all;
  std::vector<std::size_t> fake_index;  // positions of fakes in the eval set
  ScoreSet set;
  EerResult eer;
};

CleanPass clean_pass(Classifier& classifier, const Dataset& eval_set, const EvalConfig& cfg) {
  const ClassCounts counts = count_classes(eval_set);
  if (counts.real == 0 || counts.fake == 0) {
    throw ArgumentError("evaluation set needs both real and fake samples");
  }
  CleanPass pass;
  pass.all = score_dataset(classifier, eval_set, cfg.batch);
  for (std::size_t i = 0; i < eval_set.size(); ++i) {
    if (eval_set[i].label == kReal) {
      pass.set.real_scores.push_back(pass.all[i].p);
    } else {
      pass.set.fake_scores.push_back(pass.all[i].p);
      pass.fake_index.push_back(i);
    }
  }
  pass.eer = eer(pass.set);
  return pass;
}

using Manipulate = std::function<Waveform(const Waveform&, std::uint64_t)>;

std::vector<ScoreRecord> score_fakes(Classifier& classifier, const Dataset& eval_set,
                                     const std::vector<std::size_t>& fake_index,
                                     const std::vector<ManipulationSpec>& applied,
                                     const Manipulate& manipulate, const EvalConfig& cfg) {
  const std::size_t len = classifier.input_len();
  std::vector<ScoreRecord> out;
  out.reserve(fake_index.size());
  for (std::size_t begin = 0; begin < fake_index.size(); begin += cfg.batch) {
    const std::size_t end = std::min(begin + cfg.batch, fake_index.size());
    std::vector<Waveform> xs;
    xs.reserve(end - begin);
    for (std::size_t k = begin; k < end; ++k) {
      const std::size_t i = fake_index[k];
      xs.push_back(fix_length(manipulate(eval_set[i].audio, derive_seed(cfg.seed, {i})), len));
    }
    const std::vector<double> p = score_batch(classifier, xs);
    for (std::size_t k = begin; k < end; ++k) {
      const LabeledSample& s = eval_set[fake_index[k]];
      out.push_back({s.id, s.label, applied, p[k - begin]});
    }
  }
  return out;
}

CellRecord make_cell(std::vector<ManipulationSpec> applied, std::vector<ScoreRecord> fakes,
                     const CleanPass& clean, const EvalConfig& cfg) {
  ScoreSet set;
  set.real_scores = clean.set.real_scores;
  for (const ScoreRecord& r : fakes) set.fake_scores.push_back(r.p);
  const double t = clean.eer.threshold;
  CellRecord cell;
  cell.manipulations = std::move(applied);
  cell.far = far(set.fake_scores, t);
  cell.frr = frr(set.real_scores, t);
  cell.f1 = f1(set, t, cfg.f1_positive);
  cell.n_real = set.real_scores.size();
  cell.n_fake = set.fake_scores.size();
  cell.fake_scores = std::move(fakes);
  return cell;
}

EvalReport start_report(std::string kind, const CleanPass& clean, const Dataset& eval_set) {
  EvalReport report;
  report.kind = std::move(kind);
  report.clean_eer = clean.eer.eer;
  report.threshold = {clean.eer.threshold, ThresholdSource::kEerOnClean};
  report.clean_far = clean.eer.far_at_threshold;
  report.clean_frr = clean.eer.frr_at_threshold;
  for (std::size_t i = 0; i < eval_set.size(); ++i) {
    (eval_set[i].label == kReal ? report.real_scores : report.clean_fake_scores).push_back(clean.all[i]);
  }
  report.det = det_points(clean.set);
  return report;
}

void check_eval_config(const EvalConfig& cfg) {
  if (cfg.batch == 0) throw ArgumentError("evaluation batch must be positive");
}

std::string diagonal_name(DiagonalMode m) {
  return m == DiagonalMode::kSingle ? "single" : "compose_twice";
}

}  // namespace

void to_json(nlohmann::json& j, const EvalConfig& c) {
  j = nlohmann::json{{"batch", c.batch},
                     {"seed", c.seed},
                     {"f1_positive", to_string(c.f1_positive)},
                     {"diagonal", diagonal_name(c.diagonal)}};
}

void from_json(const nlohmann::json& j, EvalConfig& c) {
  EvalConfig d;
  c.batch = j.value("batch", d.batch);
  c.seed = j.value("seed", d.seed);
  c.f1_positive = f1_positive_from_string(j.value("f1_positive", std::string("real")));
  const std::string diag = j.value("diagonal", std::string("single"));
  if (diag == "single") {
    c.diagonal = DiagonalMode::kSingle;
  } else if (diag == "compose_twice") {
    c.diagonal = DiagonalMode::kComposeTwice;
  } else {
    throw ArgumentError("diagonal must be 'single' or 'compose_twice'");
  }
}

std::string CellRecord::tag() const {
  ScoreRecord r;
  if (!manipulations.empty()) r.manipulation = manipulations;
  return r.manipulation_tag();
}

const CellRecord& EvalReport::cell(std::size_t i, std::size_t j) const {
  if (matrix_size == 0 || i >= matrix_size || j >= matrix_size) {
    throw LookupError("matrix cell (" + std::to_string(i) + ", " + std::to_string(j) + ") out of range");
  }
  return cells[i * matrix_size + j];
}

EvalReport attack_sweep(Classifier& classifier, const Dataset& eval_set,
                        const std::vector<ManipulationSpec>& grid, const NoiseBank& bank,
                        const EvalConfig& cfg) {
  check_eval_config(cfg);
  for (const ManipulationSpec& s : grid) s.validate();
  const CleanPass clean = clean_pass(classifier, eval_set, cfg);
  EvalReport report = start_report("sweep", clean, eval_set);
  for (const ManipulationSpec& spec : grid) {
    const Manipulate m = [&](const Waveform& w, std::uint64_t seed) { return apply(spec, w, bank, seed); };
    report.cells.push_back(make_cell(
        {spec}, score_fakes(classifier, eval_set, clean.fake_index, {spec}, m, cfg), clean, cfg));
  }
  return report;
}

EvalReport combined_attack_matrix(Classifier& classifier, const Dataset& eval_set,
                                  const std::vector<ManipulationSpec>& specs,
                                  const NoiseBank& bank, const EvalConfig& cfg) {
  check_eval_config(cfg);
  if (specs.empty()) throw ArgumentError("combined_attack_matrix: no manipulations given");
  for (const ManipulationSpec& s : specs) s.validate();
  const CleanPass clean = clean_pass(classifier, eval_set, cfg);
  EvalReport report = start_report("matrix", clean, eval_set);
  report.matrix_size = specs.size();
  for (std::size_t i = 0; i < specs.size(); ++i) {
    for (std::size_t j = 0; j < specs.size(); ++j) {
      std::vector<ManipulationSpec> chain{specs[i], specs[j]};
      if (i == j && cfg.diagonal == DiagonalMode::kSingle) chain.pop_back();
      const Manipulate m = [&](const Waveform& w, std::uint64_t seed) {
        return compose(chain, w, bank, seed);
      };
      report.cells.push_back(make_cell(
          chain, score_fakes(classifier, eval_set, clean.fake_index, chain, m, cfg), clean, cfg));
    }
  }
  return report;
}

nlohmann::json report_summary(const EvalReport& report) {
  nlohmann::json cells = nlohmann::json::array();
  for (std::size_t k = 0; k < report.cells.size(); ++k) {
    const CellRecord& c = report.cells[k];
    nlohmann::json row{{"manipulation", c.tag()}, {"far", c.far},       {"frr", c.frr},
                       {"f1", c.f1},              {"n_real", c.n_real}, {"n_fake", c.n_fake}};
    if (report.matrix_size > 0) {
      row["row"] = k / report.matrix_size;
      row["col"] = k % report.matrix_size;
    }
    cells.push_back(std::move(row));
  }
  return nlohmann::json{{"kind", report.kind},
                        {"clean_eer", report.clean_eer},
                        {"threshold", report.threshold},
                        {"clean_far", report.clean_far},
                        {"clean_frr", report.clean_frr},
                        {"n_real", report.real_scores.size()},
                        {"n_fake", report.clean_fake_scores.size()},
                        {"matrix_size", report.matrix_size},
                        {"cells", std::move(cells)}};
}

void write_report_jsonl(const EvalReport& report, const std::filesystem::path& file) {
  std::ofstream out(file, std::ios::binary);
  if (!out) throw IoError("cannot open '" + file.string() + "' for writing");
  nlohmann::json summary = report_summary(report);
  nlohmann::json header = summary;
  header.erase("cells");
  header["record"] = "header";
  out << header.dump() << '\n';
  for (auto& cell : summary["cells"]) {
    cell["record"] = "cell";
    out << cell.dump() << '\n';
  }
  if (!out) throw IoError("failed writing '" + file.string() + "'");
}

void write_report_csv(const EvalReport& report, const std::filesystem::path& file) {
  std::ofstream out(file, std::ios::binary);
  if (!out) throw IoError("cannot open '" + file.string() + "' for writing");
  out << std::setprecision(17);
  out << "manipulation,far,frr,f1,n_real,n_fake\n";
  for (const CellRecord& c : report.cells) {
    out << '"' << c.tag() << "\"," << c.far << ',' << c.frr << ',' << c.f1 << ',' << c.n_real << ','
        << c.n_fake << '\n';
  }
  if (!out) throw IoError("failed writing '" + file.string() + "'");
}

void write_det_csv(std::span<const DetPoint> det, const std::filesystem::path& file) {
  std::ofstream out(file, std::ios::binary);
  if (!out) throw IoError("cannot open '" + file.string() + "' for writing");
  out << std::setprecision(17);
  out << "far,frr\n";
  for (const DetPoint& p : det) out << p.far << ',' << p.frr << '\n';
  if (!out) throw IoError("failed writing '" + file.string() + "'");
}

void write_report_scores(const EvalReport& report, const std::filesystem::path& file) {
  std::vector<ScoreRecord> all = report.real_scores;
  all.insert(all.end(), report.clean_fake_scores.begin(), report.clean_fake_scores.end());
  for (const CellRecord& c : report.cells) {
    all.insert(all.end(), c.fake_scores.begin(), c.fake_scores.end());
  }
  write_scores(all, file);
}

std::vector<LeaveOneOutReport> leave_one_out_study(const Dataset& train, const Dataset& eval_set,
                                                   const LeaveOneOutConfig& cfg,
                                                   std::span<const Family> families,
                                                   const NoiseBank& bank, const TrainHooks& hooks) {
  if (families.size() < 2) throw ArgumentError("leave-one-out needs at least two families");
  std::vector<ManipulationSpec> grid = cfg.grid;
  if (grid.empty()) {
    for (Family f : families) grid.push_back(representative_spec(f));
  }
  std::vector<LeaveOneOutReport> out;
  for (std::size_t k = 0; k < families.size(); ++k) {
    const AugmentationPolicy policy = cfg.policy.without(families[k]);
    policy.validate();
    TrainedModel model = train_variant(train, cfg.encoder, cfg.training, VariantConfig::clad(),
                                       policy, bank, cfg.seed, hooks);
    out.push_back({families[k], attack_sweep(*model.classifier, eval_set, grid, bank, cfg.eval)});
  }
  return out;
}

}  // namespace cladlab
