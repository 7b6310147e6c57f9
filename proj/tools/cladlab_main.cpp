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

// cladlab: command-line front end for data generation, training, evaluation
// and reporting. Every failure ends with one JSON line on stderr and a
// nonzero exit code.

#include <cstdint>
#include <cstdlib>
#include <filesystem>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "cladlab/checkpoint.hpp"
#include "cladlab/downstream.hpp"
#include "cladlab/errors.hpp"
#include "cladlab/evaluation.hpp"
#include "cladlab/experiment.hpp"

namespace fs = std::filesystem;
using namespace cladlab;

namespace {

constexpr int kExitFailure = 1;
constexpr int kExitUsage = 2;
constexpr int kExitPartial = 3;

struct Common {
  std::string config;
  std::uint64_t seed = 0;
  bool quiet = false;
};

ExperimentConfig load_config(const Common& c) {
  if (c.config.empty()) return ExperimentConfig{};
  return load_experiment_config(c.config);
}

fs::path out_path(const std::string& p) {
  const fs::path resolved = resolve_output_path(p);
  if (resolved.has_parent_path()) fs::create_directories(resolved.parent_path());
  return resolved;
}

std::ostream* progress(const Common& c) { return c.quiet ? nullptr : &std::cerr; }

TrainHooks make_hooks(const Common& c) {
  TrainHooks hooks;
  if (c.quiet) return hooks;
  hooks.on_pretrain_step = [](const StepRecord& r) {
    if (r.step % 50 == 0) std::cerr << "pretrain step " << r.step << " loss " << r.loss.total << '\n';
  };
  hooks.on_finetune_step = [](const FinetuneStep& r) {
    if (r.step % 50 == 0) std::cerr << "finetune step " << r.step << " loss " << r.loss << '\n';
  };
  return hooks;
}

std::vector<ManipulationSpec> parse_specs(const std::vector<std::string>& tags) {
  std::vector<ManipulationSpec> out;
  for (const std::string& t : tags) out.push_back(ManipulationSpec::parse(t));
  return out;
}

int cmd_gen_data(const Common& c, SynthConfig synth, const std::string& out) {
  if (!c.config.empty()) {
    const ExperimentConfig cfg = load_config(c);
    if (!cfg.dataset.synthetic) throw ArgumentError("config has no synthetic dataset section");
    synth = *cfg.dataset.synthetic;
  }
  const SynthSplit split = generate_synthetic(synth);
  const fs::path dir = resolve_output_path(out);
  write_protocol_dataset(split.train, dir / "train");
  write_protocol_dataset(split.eval, dir / "eval");
  const ClassCounts tr = count_classes(split.train);
  const ClassCounts ev = count_classes(split.eval);
  nlohmann::json j{{"status", "ok"},
                   {"dir", dir.string()},
                   {"train", {{"real", tr.real}, {"fake", tr.fake}}},
                   {"eval", {{"real", ev.real}, {"fake", ev.fake}}}};
  std::cout << j.dump() << '\n';
  return 0;
}

int cmd_pretrain(const Common& c, const std::string& out) {
  const ExperimentConfig cfg = load_config(c);
  cfg.validate();
  const SynthSplit data = load_datasets(cfg.dataset);
  const NoiseBank bank = make_noise_bank(cfg);
  PretrainResult res = pretrain_stage(data.train, initial_encoder(cfg.encoder, cfg.training, c.seed),
                                      cfg.training, cfg.variant, cfg.augmentation, bank, c.seed,
                                      make_hooks(c));
  auto* tiny = dynamic_cast<TinyEncoder*>(res.pair.query.get());
  const fs::path path = out_path(out);
  make_checkpoint(*tiny, res.steps).save(path);
  std::cout << nlohmann::json{{"status", "ok"}, {"checkpoint", path.string()}, {"steps", res.steps}}.dump()
            << '\n';
  return 0;
}

int cmd_finetune(const Common& c, const std::string& init, const std::string& out) {
  const ExperimentConfig cfg = load_config(c);
  cfg.validate();
  const SynthSplit data = load_datasets(cfg.dataset);
  const NoiseBank bank = make_noise_bank(cfg);
  std::unique_ptr<Encoder> encoder;
  if (!init.empty() && cfg.variant.use_contrastive_pretrain) {
    encoder = load_encoder(Checkpoint::load(init));
    if (encoder->input_len() != cfg.training.input_len) {
      throw ArgumentError("checkpoint input length differs from training.input_len");
    }
  } else {
    if (!init.empty()) std::cerr << "note: variant has no pretraining; --init ignored\n";
    encoder = initial_encoder(cfg.encoder, cfg.training, c.seed);
  }
  TrainedModel model = finetune_stage(data.train, std::move(encoder), cfg.training, cfg.variant,
                                      cfg.augmentation, bank, c.seed, make_hooks(c));
  const fs::path path = out_path(out);
  make_checkpoint(*model.classifier, model.finetune.steps).save(path);
  std::cout << nlohmann::json{{"status", "ok"},
                              {"checkpoint", path.string()},
                              {"steps", model.finetune.steps},
                              {"train_accuracy", model.finetune.final_epoch_accuracy}}
                   .dump()
            << '\n';
  return 0;
}

int cmd_eval(const Common& c, const std::string& model, const std::string& out, bool matrix,
             const std::vector<std::string>& tags) {
  const ExperimentConfig cfg = load_config(c);
  cfg.validate();
  const SynthSplit data = load_datasets(cfg.dataset);
  const NoiseBank bank = make_noise_bank(cfg);
  auto classifier = load_classifier(Checkpoint::load(model));
  if (classifier->input_len() != cfg.training.input_len) {
    throw ArgumentError("model input length differs from training.input_len");
  }
  const fs::path dir = resolve_output_path(out);
  EvalReport report;
  if (matrix) {
    report = combined_attack_matrix(*classifier, data.eval,
                                    tags.empty() ? resolve_matrix_specs(cfg) : parse_specs(tags), bank,
                                    cfg.eval);
    write_eval_outputs(report, dir, "matrix");
  } else {
    report = attack_sweep(*classifier, data.eval,
                          tags.empty() ? resolve_eval_grid(cfg, bank) : parse_specs(tags), bank, cfg.eval);
    write_eval_outputs(report, dir, "report");
  }
  nlohmann::json j = report_summary(report);
  j["status"] = "ok";
  j["dir"] = dir.string();
  std::cout << j.dump() << '\n';
  return 0;
}

int cmd_leave_one_out(const Common& c, const std::string& out, const std::vector<std::string>& families) {
  ExperimentConfig cfg = load_config(c);
  if (!families.empty()) {
    cfg.leave_one_out_families.clear();
    for (const std::string& f : families) cfg.leave_one_out_families.push_back(parse_family(f));
  }
  cfg.validate();
  const SynthSplit data = load_datasets(cfg.dataset);
  const NoiseBank bank = make_noise_bank(cfg);
  const LeaveOneOutConfig lcfg{cfg.encoder, cfg.training, cfg.augmentation, cfg.eval, c.seed, {}};
  const auto reports =
      leave_one_out_study(data.train, data.eval, lcfg, cfg.leave_one_out_families, bank, make_hooks(c));
  const fs::path dir = resolve_output_path(out);
  nlohmann::json j{{"status", "ok"}, {"dir", dir.string()}, {"models", nlohmann::json::array()}};
  for (const LeaveOneOutReport& r : reports) {
    const std::string name(to_string(r.excluded));
    write_eval_outputs(r.report, dir / name, "report");
    j["models"].push_back(report_summary(r.report));
    j["models"].back()["excluded"] = name;
  }
  std::cout << j.dump() << '\n';
  return 0;
}

int cmd_manipulate(const Common& c, const std::string& in, const std::string& out, const std::string& tag,
                   const std::string& noise_dir) {
  const NoiseBank bank = noise_dir.empty() ? NoiseBank::synthetic(0) : NoiseBank::load_directory(noise_dir);
  const ManipulationSpec spec = ManipulationSpec::parse(tag);
  const fs::path path = out_path(out);
  const ManipulateResult r = manipulate_file(in, spec, path, c.seed, bank);
  nlohmann::json j{{"status", "ok"}, {"out", path.string()}, {"manipulation", spec.tag()}};
  if (r.achieved_snr_db) j["achieved_snr_db"] = *r.achieved_snr_db;
  std::cout << j.dump() << '\n';
  return 0;
}

int cmd_report(const std::string& dir) {
  std::cout << summarize_output(resolve_output_path(dir)).dump(2) << '\n';
  return 0;
}

int cmd_run(const Common& c, const std::string& output_dir, const std::vector<std::uint64_t>& seeds) {
  ExperimentConfig cfg = load_config(c);
  if (!output_dir.empty()) cfg.output_dir = output_dir;
  if (!seeds.empty()) cfg.seeds = seeds;
  RunOptions opts;
  opts.log = progress(c);
  const RunSummary run = run_experiment(cfg, opts);
  std::cout << run.table.dump(2) << '\n';
  if (!run.ok()) {
    for (const SeedOutcome& s : run.seeds) {
      if (s.failure) std::cerr << nlohmann::json(*s.failure).dump() << '\n';
    }
    return kExitPartial;
  }
  return 0;
}

void print_failure(const std::string& command, const char* category, const std::string& message) {
  const nlohmann::json j{{"status", "failed"}, {"command", command}, {"category", category}, {"message", message}};
  std::cerr << j.dump() << '\n';
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"cladlab: manipulation-robust audio deepfake detection lab"};
  app.require_subcommand(1);
  Common common;

  auto add_common = [&common](CLI::App* sub, bool with_config = true) {
    if (with_config) sub->add_option("-c,--config", common.config, "Experiment config (JSON)");
    sub->add_option("-s,--seed", common.seed, "Model / noise seed");
    sub->add_flag("-q,--quiet", common.quiet, "No progress output");
  };

  SynthConfig synth;
  std::string gen_out = "data";
  auto* gen = app.add_subcommand("gen-data", "Write a synthetic train/eval corpus in protocol layout");
  add_common(gen);
  gen->add_option("--n-train", synth.n_train);
  gen->add_option("--n-eval", synth.n_eval);
  gen->add_option("--real-fraction", synth.real_fraction);
  gen->add_option("--duration", synth.duration_samples, "Clip length in samples");
  gen->add_option("--data-seed", synth.seed);
  gen->add_option("-o,--out", gen_out, "Output directory");

  std::string pre_out = "encoder.ckpt";
  auto* pre = app.add_subcommand("pretrain", "Contrastive pretraining of the encoder");
  add_common(pre);
  pre->add_option("-o,--out", pre_out, "Encoder checkpoint");

  std::string ft_init;
  std::string ft_out = "classifier.ckpt";
  auto* ft = app.add_subcommand("finetune", "Train encoder + linear head");
  add_common(ft);
  ft->add_option("--init", ft_init, "Pretrained encoder checkpoint");
  ft->add_option("-o,--out", ft_out, "Classifier checkpoint");

  std::string ev_model;
  std::string ev_out = "eval";
  std::vector<std::string> ev_specs;
  auto* ev = app.add_subcommand("eval", "Clean EER and single-manipulation sweep");
  add_common(ev);
  ev->add_option("-m,--model", ev_model, "Classifier checkpoint")->required();
  ev->add_option("-o,--out", ev_out, "Report directory");
  ev->add_option("--spec", ev_specs, "Manipulation tag (repeatable; default: config grid)");

  std::string mx_model;
  std::string mx_out = "matrix";
  std::vector<std::string> mx_specs;
  auto* mx = app.add_subcommand("attack-matrix", "Pairwise combined-manipulation matrix");
  add_common(mx);
  mx->add_option("-m,--model", mx_model, "Classifier checkpoint")->required();
  mx->add_option("-o,--out", mx_out, "Report directory");
  mx->add_option("--spec", mx_specs, "Manipulation tag (repeatable; default: representative set)");

  std::string loo_out = "leave_one_out";
  std::vector<std::string> loo_families;
  auto* loo = app.add_subcommand("leave-one-out", "Train one model per held-out family");
  add_common(loo);
  loo->add_option("-o,--out", loo_out, "Report directory");
  loo->add_option("--family", loo_families, "Family to study (repeatable; default: all eight)");

  std::string mp_in;
  std::string mp_out;
  std::string mp_spec;
  std::string mp_noise;
  auto* mp = app.add_subcommand("manipulate", "Apply one manipulation to a WAV file");
  add_common(mp, false);
  mp->add_option("-i,--in", mp_in, "Input WAV")->required()->check(CLI::ExistingFile);
  mp->add_option("-o,--out", mp_out, "Output WAV")->required();
  mp->add_option("--spec", mp_spec, "Manipulation tag, e.g. volume:factor=0.5")->required();
  mp->add_option("--noise-dir", mp_noise, "Directory of <noise_id>.wav files");

  std::string rep_dir;
  auto* rep = app.add_subcommand("report", "Rebuild summary.json / summary.csv of a run directory");
  rep->add_option("dir", rep_dir, "Run output directory")->required();
  rep->add_flag("-q,--quiet", common.quiet, "No progress output");

  std::string run_out;
  std::vector<std::uint64_t> run_seeds;
  auto* run = app.add_subcommand("run", "Full experiment: train, evaluate and summarize every seed");
  add_common(run);
  run->add_option("-o,--output-dir", run_out, "Overrides output_dir");
  run->add_option("--seeds", run_seeds, "Overrides seeds");

  auto* defaults = app.add_subcommand("default-config", "Print the default experiment config");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    if (code != 0) print_failure("parse", "usage", e.what());
    return code == 0 ? 0 : kExitUsage;
  }

  const std::string command = app.get_subcommands().front()->get_name();
  try {
    if (gen->parsed()) return cmd_gen_data(common, synth, gen_out);
    if (pre->parsed()) return cmd_pretrain(common, pre_out);
    if (ft->parsed()) return cmd_finetune(common, ft_init, ft_out);
    if (ev->parsed()) return cmd_eval(common, ev_model, ev_out, false, ev_specs);
    if (mx->parsed()) return cmd_eval(common, mx_model, mx_out, true, mx_specs);
    if (loo->parsed()) return cmd_leave_one_out(common, loo_out, loo_families);
    if (mp->parsed()) return cmd_manipulate(common, mp_in, mp_out, mp_spec, mp_noise);
    if (rep->parsed()) return cmd_report(rep_dir);
    if (run->parsed()) return cmd_run(common, run_out, run_seeds);
    if (defaults->parsed()) {
      ExperimentConfig cfg;
      cfg.dataset.synthetic = SynthConfig{};
      std::cout << nlohmann::json(cfg).dump(2) << '\n';
      return 0;
    }
  } catch (const Error& e) {
    print_failure(command, e.category(), e.what());
    return kExitFailure;
  } catch (const std::exception& e) {
    print_failure(command, "internal", e.what());
    return kExitFailure;
  }
  return kExitUsage;
}
