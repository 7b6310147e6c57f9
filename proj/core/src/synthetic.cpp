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
#include <cstdio>
#include <numbers>

#include <nlohmann/json.hpp>

#include "cladlab/dataset.hpp"
#include "cladlab/errors.hpp"
#include "cladlab/rng.hpp"

namespace cladlab {
namespace {

constexpr int kHarmonics = 5;
constexpr double kVibratoDepth = 0.03;
constexpr double kVibratoHz = 5.0;
constexpr std::size_t kPhaseResetPeriod = 512;
constexpr double kNoiseSnrDb = 30.0;
constexpr double kPeak = 0.9;

std::size_t real_count(std::size_t n, double fraction) {
  return static_cast<std::size_t>(std::llround(static_cast<double>(n) * fraction));
}

Dataset make_split(const char* name, std::size_t n, const SynthConfig& cfg, std::uint64_t seed) {
  std::vector<int> labels(n, 0);
  std::fill_n(labels.begin(), real_count(n, cfg.real_fraction), 1);
  Rng rng = make_rng(derive_seed(seed, {0x1abe1}));
  std::shuffle(labels.begin(), labels.end(), rng);

  Dataset out;
  out.reserve(n);
  char id[64];
  for (std::size_t i = 0; i < n; ++i) {
    std::snprintf(id, sizeof(id), "synth_%s_%05zu", name, i);
    LabeledSample s;
    s.id = id;
    s.label = labels[i];
    s.system_id = labels[i] == 1 ? "-" : "SYN";
    s.audio = synth_clip(labels[i] == 1, cfg.duration_samples, cfg.sample_rate_hz,
                         derive_seed(seed, {i}));
    out.push_back(std::move(s));
  }
  return out;
}

}  // namespace

ClassCounts count_classes(const Dataset& data) {
  ClassCounts c;
  for (const LabeledSample& s : data) (s.label == 1 ? c.real : c.fake) += 1;
  return c;
}

void SynthConfig::validate() const {
  if (n_train < 2 || n_eval < 2) throw ArgumentError("n_train and n_eval must be at least 2");
  if (!(real_fraction > 0.0 && real_fraction < 1.0)) {
    throw ArgumentError("real_fraction must lie in (0, 1)");
  }
  for (std::size_t n : {n_train, n_eval}) {
    const std::size_t r = real_count(n, real_fraction);
    if (r == 0 || r == n) throw ArgumentError("every split needs both real and fake samples");
  }
  if (duration_samples == 0) throw ArgumentError("duration_samples must be positive");
  if (sample_rate_hz <= 0) throw ArgumentError("sample_rate_hz must be positive");
}

void to_json(nlohmann::json& j, const SynthConfig& c) {
  j = nlohmann::json{{"n_train", c.n_train},
                     {"n_eval", c.n_eval},
                     {"real_fraction", c.real_fraction},
                     {"duration_samples", c.duration_samples},
                     {"sample_rate_hz", c.sample_rate_hz},
                     {"seed", c.seed}};
}

void from_json(const nlohmann::json& j, SynthConfig& c) {
  SynthConfig d;
  c.n_train = j.value("n_train", d.n_train);
  c.n_eval = j.value("n_eval", d.n_eval);
  c.real_fraction = j.value("real_fraction", d.real_fraction);
  c.duration_samples = j.value("duration_samples", d.duration_samples);
  c.sample_rate_hz = j.value("sample_rate_hz", d.sample_rate_hz);
  c.seed = j.value("seed", d.seed);
}

Waveform synth_clip(bool real, std::size_t len, int sample_rate_hz, std::uint64_t seed) {
  if (len == 0 || sample_rate_hz <= 0) throw ArgumentError("synth_clip: bad length or rate");
  Rng rng = make_rng(seed);
  std::uniform_real_distribution<double> f0_dist(120.0, 280.0);
  std::uniform_real_distribution<double> phase_dist(0.0, 2.0 * std::numbers::pi);
  const double f0 = f0_dist(rng);
  const double vib_phase = phase_dist(rng);
  double phase0[kHarmonics];
  for (double& p : phase0) p = phase_dist(rng);

  const double fs = static_cast<double>(sample_rate_hz);
  const double two_pi = 2.0 * std::numbers::pi;
  std::vector<double> x(len);
  double theta = 0.0;  // fundamental phase without the per-harmonic offset
  for (std::size_t n = 0; n < len; ++n) {
    if (real) {
      const double t = static_cast<double>(n) / fs;
      const double f = f0 * (1.0 + kVibratoDepth * std::sin(two_pi * kVibratoHz * t + vib_phase));
      if (n > 0) theta += two_pi * f / fs;
    } else {
      theta = two_pi * f0 * static_cast<double>(n % kPhaseResetPeriod) / fs;
    }
    double v = 0.0;
    for (int k = 1; k <= kHarmonics; ++k) {
      const double amp = real ? 1.0 / k : 1.0 / (k * k);
      v += amp * std::sin(k * theta + phase0[k - 1]);
    }
    x[n] = v;
  }

  const double attack = std::max(1.0, static_cast<double>(len) / 20.0);
  const double decay = std::max(1.0, static_cast<double>(len) / 10.0);
  for (std::size_t n = 0; n < len; ++n) {
    const double rise = std::min(1.0, static_cast<double>(n) / attack);
    const double fall = std::min(1.0, static_cast<double>(len - n) / decay);
    x[n] *= rise * fall;
  }

  const double power = measure_power(x).mean_square_power;
  std::normal_distribution<double> noise(0.0, std::sqrt(power / std::pow(10.0, kNoiseSnrDb / 10.0)));
  for (double& v : x) v += noise(rng);

  const double peak = measure_power(x).peak_abs;
  if (peak > 0.0) {
    for (double& v : x) v *= kPeak / peak;
  }
  return Waveform(std::move(x), sample_rate_hz);
}

SynthSplit generate_synthetic(const SynthConfig& cfg) {
  cfg.validate();
  SynthSplit split;
  split.train = make_split("train", cfg.n_train, cfg, derive_seed(cfg.seed, {0}));
  split.eval = make_split("eval", cfg.n_eval, cfg, derive_seed(cfg.seed, {1}));
  return split;
}

}  // namespace cladlab
