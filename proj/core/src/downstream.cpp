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

#include "cladlab/downstream.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <numeric>

#include <nlohmann/json.hpp>

#include "cladlab/errors.hpp"
#include "cladlab/losses.hpp"
#include "cladlab/optimizer.hpp"
#include "cladlab/rng.hpp"

namespace cladlab {
namespace {

constexpr char kTagSeparator = '>';

FeatureMatrix to_matrix(const std::vector<float>& v, std::size_t rows, std::size_t cols) {
  FeatureMatrix m(static_cast<Eigen::Index>(rows), static_cast<Eigen::Index>(cols));
  for (std::size_t i = 0; i < rows * cols; ++i) m.data()[i] = v[i];
  return m;
}

std::vector<float> to_floats(const FeatureMatrix& m) {
  std::vector<float> v(static_cast<std::size_t>(m.size()));
  for (std::size_t i = 0; i < v.size(); ++i) v[i] = static_cast<float>(m.data()[i]);
  return v;
}

}  // namespace

Classifier::Classifier(std::unique_ptr<Encoder> encoder, std::uint64_t seed)
    : encoder_(std::move(encoder)) {
  if (!encoder_) throw ArgumentError("classifier: encoder is null");
  const std::size_t d = encoder_->feature_dim();
  head_ = nn::Linear(d, 2);
  Rng rng = make_rng(derive_seed(seed, {0x4ead}));
  nn::init_uniform(head_.weight, d, rng);
  nn::init_uniform(head_.bias, d, rng);
}

FeatureMatrix Classifier::forward(std::span<const Waveform> batch, ForwardMode mode,
                                  FeatureMatrix* features) {
  const ForwardMode enc_mode = frozen_ ? ForwardMode::kInference : mode;
  FeatureMatrix feats = encoder_->forward(batch, enc_mode);
  const std::size_t n = batch.size();
  std::vector<float> f = to_floats(feats);
  std::vector<float> logits;
  head_.forward(f, n, logits);
  if (mode == ForwardMode::kTraining) {
    cached_features_ = std::move(f);
    cached_batch_ = n;
  }
  if (features != nullptr) *features = std::move(feats);
  return to_matrix(logits, n, 2);
}

void Classifier::backward(const FeatureMatrix& grad_logits, const FeatureMatrix* grad_features) {
  if (cached_batch_ == 0) throw ConsistencyError("classifier: backward() without a training forward");
  if (static_cast<std::size_t>(grad_logits.rows()) != cached_batch_ || grad_logits.cols() != 2) {
    throw ArgumentError("classifier: logit gradient shape does not match the cached batch");
  }
  const std::vector<float> dy = to_floats(grad_logits);
  if (frozen_) {
    head_.backward(cached_features_, dy, cached_batch_, nullptr);
    return;
  }
  std::vector<float> dx;
  head_.backward(cached_features_, dy, cached_batch_, &dx);
  FeatureMatrix dfeat = to_matrix(dx, cached_batch_, encoder_->feature_dim());
  if (grad_features != nullptr) {
    if (grad_features->rows() != dfeat.rows() || grad_features->cols() != dfeat.cols()) {
      throw ArgumentError("classifier: feature gradient shape does not match the cached batch");
    }
    dfeat += *grad_features;
  }
  encoder_->backward(dfeat);
}

std::vector<nn::ParameterRef> Classifier::parameters() {
  std::vector<nn::ParameterRef> out{{"head.weight", head_.weight.values, head_.weight.grads},
                                    {"head.bias", head_.bias.values, head_.bias.grads}};
  if (!frozen_) {
    for (auto& p : encoder_->parameters()) out.push_back(std::move(p));
  }
  return out;
}

void Classifier::zero_grad() {
  std::fill(head_.weight.grads.begin(), head_.weight.grads.end(), 0.0f);
  std::fill(head_.bias.grads.begin(), head_.bias.grads.end(), 0.0f);
  encoder_->zero_grad();
}

std::vector<double> score_batch(Classifier& classifier, std::span<const Waveform> batch) {
  const FeatureMatrix logits = classifier.forward(batch, ForwardMode::kInference);
  std::vector<double> p(batch.size());
  for (std::size_t i = 0; i < p.size(); ++i) {
    const auto r = static_cast<Eigen::Index>(i);
    p[i] = real_probability(logits(r, 0), logits(r, 1));
  }
  return p;
}

Checkpoint make_checkpoint(Classifier& classifier, std::uint64_t step) {
  auto* tiny = dynamic_cast<TinyEncoder*>(&classifier.encoder());
  if (tiny == nullptr) throw ArgumentError("checkpoints are only supported for TinyEncoder");
  Checkpoint ckpt = make_checkpoint(*tiny, step);
  nn::Linear& head = classifier.head();
  const std::vector<nn::ParameterRef> refs{{"head.weight", head.weight.values, head.weight.grads},
                                           {"head.bias", head.bias.values, head.bias.grads}};
  append_tensors(ckpt, refs);
  return ckpt;
}

std::unique_ptr<Classifier> load_classifier(const Checkpoint& ckpt) {
  auto clf = std::make_unique<Classifier>(load_encoder(ckpt), 0);
  nn::Linear& head = clf->head();
  const std::vector<nn::ParameterRef> refs{{"head.weight", head.weight.values, {}},
                                           {"head.bias", head.bias.values, {}}};
  restore_tensors(ckpt, refs);
  return clf;
}

// --- Variants -------------------------------------------------------------------

std::optional<std::string> VariantConfig::preset_name() const {
  if (*this == vanilla()) return "vanilla";
  if (*this == cl()) return "cl";
  if (*this == ll()) return "ll";
  if (*this == clad()) return "clad";
  return std::nullopt;
}

VariantConfig VariantConfig::from_name(std::string_view name) {
  if (name == "vanilla") return vanilla();
  if (name == "cl") return cl();
  if (name == "ll") return ll();
  if (name == "clad") return clad();
  throw ArgumentError("unknown variant '" + std::string(name) + "' (vanilla, cl, ll, clad)");
}

void to_json(nlohmann::json& j, const VariantConfig& v) {
  j = nlohmann::json{{"use_contrastive_pretrain", v.use_contrastive_pretrain},
                     {"use_length_loss", v.use_length_loss},
                     {"supervised_augmentation", v.supervised_augmentation}};
  if (auto name = v.preset_name()) j["name"] = *name;
}

void from_json(const nlohmann::json& j, VariantConfig& v) {
  if (j.is_string()) {
    v = VariantConfig::from_name(j.get<std::string>());
    return;
  }
  VariantConfig base = j.contains("name") ? VariantConfig::from_name(j.at("name").get<std::string>())
                                          : VariantConfig{};
  v.use_contrastive_pretrain = j.value("use_contrastive_pretrain", base.use_contrastive_pretrain);
  v.use_length_loss = j.value("use_length_loss", base.use_length_loss);
  v.supervised_augmentation = j.value("supervised_augmentation", base.supervised_augmentation);
}

// --- Fine-tuning ------------------------------------------------------------------

void to_json(nlohmann::json& j, const FinetuneStep& s) {
  j = nlohmann::json{{"epoch", s.epoch}, {"step", s.step}, {"loss", s.loss}, {"accuracy", s.accuracy}};
}

FinetuneResult finetune(Classifier& classifier, const Dataset& data, const TrainingConfig& cfg,
                        const VariantConfig& variant, const AugmentationPolicy& policy,
                        const NoiseBank& bank, const FinetuneOptions& options) {
  if (data.empty()) throw ArgumentError("finetune: empty dataset");
  cfg.validate();
  if (variant.supervised_augmentation) policy.validate();
  const std::size_t len = classifier.input_len();
  if (len != cfg.input_len) {
    throw ArgumentError("finetune: encoder input length differs from the training input_len");
  }
  classifier.set_encoder_frozen(cfg.freeze_encoder);
  const bool add_length = variant.use_length_loss && !variant.use_contrastive_pretrain &&
                          !cfg.freeze_encoder && cfg.length_weight > 0.0;

  Adam optimizer(AdamOptions{.weight_decay = cfg.downstream_weight_decay});
  FinetuneResult result;
  std::vector<std::size_t> order(data.size());
  const std::size_t n_steps = steps_per_epoch(data.size(), cfg.downstream_batch);

  for (std::size_t epoch = 0; epoch < cfg.downstream_epochs; ++epoch) {
    std::iota(order.begin(), order.end(), std::size_t{0});
    Rng shuffle_rng = make_rng(derive_seed(options.seed, {0xf1, epoch}));
    std::shuffle(order.begin(), order.end(), shuffle_rng);
    std::size_t correct = 0;
    for (std::size_t step = 0; step < n_steps; ++step) {
      const std::size_t begin = step * cfg.downstream_batch;
      const std::size_t end = std::min(begin + cfg.downstream_batch, order.size());
      std::vector<Waveform> views;
      std::vector<int> labels;
      views.reserve(end - begin);
      for (std::size_t i = begin; i < end; ++i) {
        const LabeledSample& s = data[order[i]];
        Waveform x = fix_length(s.audio, len);
        if (variant.supervised_augmentation) {
          Rng rng = make_rng(derive_seed(options.seed, {0xa6, epoch, step, i - begin}));
          x = fix_length(sample_view(policy, x, bank, rng).audio, len);
        }
        views.push_back(std::move(x));
        labels.push_back(s.label);
      }

      FeatureMatrix feats;
      const FeatureMatrix logits = classifier.forward(views, ForwardMode::kTraining, &feats);
      const LossWithGrad ce = downstream_loss_from_logits(logits, labels);
      double loss = ce.loss;
      classifier.zero_grad();
      if (add_length) {
        const LossWithGrad ll = length_loss(feats, labels, cfg.real_weight, cfg.margin);
        loss += cfg.length_weight * ll.loss;
        const FeatureMatrix g = cfg.length_weight * ll.grad;
        classifier.backward(ce.grad, &g);
      } else {
        classifier.backward(ce.grad);
      }
      const auto params = classifier.parameters();
      optimizer.step(params, cfg.downstream_lr);

      std::size_t batch_correct = 0;
      for (std::size_t i = 0; i < labels.size(); ++i) {
        const auto r = static_cast<Eigen::Index>(i);
        const int pred = real_probability(logits(r, 0), logits(r, 1)) > 0.5 ? kReal : kFake;
        if (pred == labels[i]) ++batch_correct;
      }
      correct += batch_correct;
      if (!std::isfinite(loss)) {
        throw DomainError("fine-tuning diverged at step " + std::to_string(result.steps));
      }
      FinetuneStep rec{epoch, result.steps, loss,
                       static_cast<double>(batch_correct) / static_cast<double>(labels.size())};
      ++result.steps;
      if (options.on_step) options.on_step(rec);
      result.log.push_back(rec);
    }
    result.final_epoch_accuracy = static_cast<double>(correct) / static_cast<double>(data.size());
  }
  return result;
}

std::unique_ptr<Encoder> initial_encoder(TinyEncoderConfig encoder_cfg, const TrainingConfig& cfg,
                                         std::uint64_t seed) {
  encoder_cfg.input_len = cfg.input_len;
  encoder_cfg.validate();
  return std::make_unique<TinyEncoder>(encoder_cfg, derive_seed(seed, {0xe1}));
}

PretrainResult pretrain_stage(const Dataset& train, std::unique_ptr<Encoder> encoder,
                              const TrainingConfig& cfg, const VariantConfig& variant,
                              const AugmentationPolicy& policy, const NoiseBank& bank,
                              std::uint64_t seed, const TrainHooks& hooks) {
  TrainingConfig pre = cfg;
  if (!variant.use_length_loss) pre.length_weight = 0.0;
  PretrainOptions opts;
  opts.seed = derive_seed(seed, {0x9e});
  opts.on_step = hooks.on_pretrain_step;
  return pretrain(train, std::move(encoder), pre, policy, bank, opts);
}

TrainedModel finetune_stage(const Dataset& train, std::unique_ptr<Encoder> encoder,
                            const TrainingConfig& cfg, const VariantConfig& variant,
                            const AugmentationPolicy& policy, const NoiseBank& bank,
                            std::uint64_t seed, const TrainHooks& hooks) {
  TrainedModel model;
  model.classifier = std::make_unique<Classifier>(std::move(encoder), derive_seed(seed, {0x4e}));
  FinetuneOptions fopts;
  fopts.seed = derive_seed(seed, {0xf7});
  fopts.on_step = hooks.on_finetune_step;
  model.finetune = finetune(*model.classifier, train, cfg, variant, policy, bank, fopts);
  return model;
}

TrainedModel train_variant(const Dataset& train, TinyEncoderConfig encoder_cfg,
                           const TrainingConfig& cfg, const VariantConfig& variant,
                           const AugmentationPolicy& policy, const NoiseBank& bank,
                           std::uint64_t seed, const TrainHooks& hooks) {
  std::unique_ptr<Encoder> encoder = initial_encoder(std::move(encoder_cfg), cfg, seed);
  std::vector<StepRecord> pretrain_log;
  if (variant.use_contrastive_pretrain) {
    PretrainResult res = pretrain_stage(train, std::move(encoder), cfg, variant, policy, bank, seed, hooks);
    encoder = std::move(res.pair.query);
    pretrain_log = std::move(res.log);
  }
  TrainedModel model = finetune_stage(train, std::move(encoder), cfg, variant, policy, bank, seed, hooks);
  model.pretrain_log = std::move(pretrain_log);
  return model;
}

// --- Score files --------------------------------------------------------------

std::string ScoreRecord::manipulation_tag() const {
  if (!manipulation || manipulation->empty()) return "none";
  std::string out;
  for (const ManipulationSpec& s : *manipulation) {
    if (!out.empty()) out += kTagSeparator;
    out += s.tag();
  }
  return out;
}

void to_json(nlohmann::json& j, const ScoreRecord& r) {
  j = nlohmann::json{{"sample_id", r.sample_id},
                     {"label", r.label},
                     {"manipulation", r.manipulation_tag()},
                     {"p", r.p}};
}

void from_json(const nlohmann::json& j, ScoreRecord& r) {
  r.sample_id = j.at("sample_id").get<std::string>();
  r.label = j.at("label").get<int>();
  if (r.label != kReal && r.label != kFake) throw FormatError("score record label must be 0 or 1");
  r.p = j.at("p").get<double>();
  if (!(r.p >= 0.0 && r.p <= 1.0)) throw FormatError("score record p must lie in [0, 1]");
  const std::string tag = j.value("manipulation", std::string("none"));
  r.manipulation.reset();
  if (tag == "none") return;
  std::vector<ManipulationSpec> specs;
  std::size_t start = 0;
  while (start <= tag.size()) {
    const std::size_t sep = tag.find(kTagSeparator, start);
    const std::size_t stop = sep == std::string::npos ? tag.size() : sep;
    specs.push_back(ManipulationSpec::parse(std::string_view(tag).substr(start, stop - start)));
    if (sep == std::string::npos) break;
    start = sep + 1;
  }
  r.manipulation = std::move(specs);
}

void write_scores(const std::vector<ScoreRecord>& records, const std::filesystem::path& file) {
  std::ofstream out(file, std::ios::binary);
  if (!out) throw IoError("cannot open '" + file.string() + "' for writing");
  for (const ScoreRecord& r : records) out << nlohmann::json(r).dump() << '\n';
  if (!out) throw IoError("failed writing '" + file.string() + "'");
}

std::vector<ScoreRecord> read_scores(const std::filesystem::path& file) {
  std::ifstream in(file, std::ios::binary);
  if (!in) throw IoError("cannot open '" + file.string() + "'");
  std::vector<ScoreRecord> out;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    try {
      out.push_back(nlohmann::json::parse(line).get<ScoreRecord>());
    } catch (const nlohmann::json::exception& e) {
      throw ParseError(e.what(), line_no);
    } catch (const Error& e) {
      throw ParseError(e.what(), line_no);
    }
  }
  return out;
}

std::vector<ScoreRecord> score_dataset(Classifier& classifier, const Dataset& data,
                                       std::size_t batch) {
  if (batch == 0) throw ArgumentError("score_dataset: batch must be positive");
  std::vector<ScoreRecord> out;
  out.reserve(data.size());
  const std::size_t len = classifier.input_len();
  for (std::size_t begin = 0; begin < data.size(); begin += batch) {
    const std::size_t end = std::min(begin + batch, data.size());
    std::vector<Waveform> xs;
    for (std::size_t i = begin; i < end; ++i) xs.push_back(fix_length(data[i].audio, len));
    const std::vector<double> p = score_batch(classifier, xs);
    for (std::size_t i = begin; i < end; ++i) {
      out.push_back({data[i].id, data[i].label, std::nullopt, p[i - begin]});
    }
  }
  return out;
}

}  // namespace cladlab
