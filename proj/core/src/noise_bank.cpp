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
#include <numbers>

#include "cladlab/errors.hpp"
#include "cladlab/manipulations.hpp"

namespace cladlab {
namespace {

// First-order sections; enough to give each category a distinct spectral tilt.
class OnePole {
 public:
  OnePole(double cutoff_hz, int rate)
      : a_(std::exp(-2.0 * std::numbers::pi * cutoff_hz / rate)) {}
  double lowpass(double x) {
    y_ = (1.0 - a_) * x + a_ * y_;
    return y_;
  }
  double highpass(double x) { return x - lowpass(x); }

 private:
  double a_;
  double y_ = 0.0;
};

void normalize_peak(std::vector<double>& x, double peak) {
  double m = 0.0;
  for (double v : x) m = std::max(m, std::abs(v));
  if (m > 0.0) {
    for (double& v : x) v *= peak / m;
  }
}

// Burst of band-limited noise with an exponential decay envelope.
void add_burst(std::vector<double>& out, std::size_t start, std::size_t len, double decay_s,
               double lo_hz, double hi_hz, double gain, int rate, Rng& rng) {
  std::normal_distribution<double> normal(0.0, 1.0);
  OnePole lp(hi_hz, rate);
  OnePole hp(lo_hz, rate);
  for (std::size_t i = 0; i < len && start + i < out.size(); ++i) {
    const double t = static_cast<double>(i) / rate;
    const double attack = std::min(1.0, t / 0.005);
    out[start + i] += gain * attack * std::exp(-t / decay_s) * hp.highpass(lp.lowpass(normal(rng)));
  }
}

std::vector<double> synth_category(std::string_view id, std::size_t n, int rate, Rng& rng) {
  std::normal_distribution<double> normal(0.0, 1.0);
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  std::vector<double> x(n, 0.0);
  const double dt = 1.0 / rate;

  if (id == "wind") {
    OnePole lp(250.0, rate);
    const double phase = 2.0 * std::numbers::pi * unit(rng);
    for (std::size_t i = 0; i < n; ++i) {
      const double gust = 0.6 + 0.4 * std::sin(2.0 * std::numbers::pi * 0.3 * i * dt + phase);
      x[i] = gust * lp.lowpass(normal(rng));
    }
  } else if (id == "rain") {
    OnePole hp(2000.0, rate);
    for (std::size_t i = 0; i < n; ++i) x[i] = 0.2 * hp.highpass(normal(rng));
    std::poisson_distribution<int> drops(200.0 * static_cast<double>(n) / rate);
    const int count = drops(rng);
    for (int d = 0; d < count; ++d) {
      const auto at = static_cast<std::size_t>(unit(rng) * static_cast<double>(n));
      add_burst(x, at, static_cast<std::size_t>(0.004 * rate), 0.001, 1500.0, 7000.0,
                0.5 + unit(rng), rate, rng);
    }
  } else if (id == "footsteps") {
    const auto period = static_cast<std::size_t>(0.5 * rate);
    for (std::size_t at = period / 4; at < n; at += period) {
      add_burst(x, at, static_cast<std::size_t>(0.08 * rate), 0.02, 40.0, 600.0, 1.0, rate, rng);
    }
  } else if (id == "breathing") {
    OnePole lp(1500.0, rate);
    OnePole hp(300.0, rate);
    for (std::size_t i = 0; i < n; ++i) {
      const double env = std::pow(std::sin(std::numbers::pi * 0.25 * i * dt), 2.0);
      x[i] = env * hp.highpass(lp.lowpass(normal(rng)));
    }
  } else if (id == "coughing") {
    const auto period = static_cast<std::size_t>(1.2 * rate);
    for (std::size_t at = static_cast<std::size_t>(0.2 * rate); at < n; at += period) {
      add_burst(x, at, static_cast<std::size_t>(0.2 * rate), 0.06, 200.0, 3000.0, 1.0, rate, rng);
    }
  } else if (id == "clock_tick") {
    const auto period = static_cast<std::size_t>(0.5 * rate);
    for (std::size_t at = 0, k = 0; at < n; at += period, ++k) {
      add_burst(x, at, static_cast<std::size_t>(0.003 * rate), 0.0008, 2500.0, 7500.0,
                k % 2 == 0 ? 1.0 : 0.7, rate, rng);
    }
  } else {  // sneezing: inhale ramp then a broadband burst, every 1.5 s
    const auto inhale = static_cast<std::size_t>(0.5 * rate);
    const auto period = static_cast<std::size_t>(1.5 * rate);
    for (std::size_t start = static_cast<std::size_t>(0.05 * rate); start < n; start += period) {
      OnePole lp(900.0, rate);
      for (std::size_t i = 0; i < inhale && start + i < n; ++i) {
        const double ramp = static_cast<double>(i) / static_cast<double>(inhale);
        x[start + i] = 0.3 * ramp * lp.lowpass(normal(rng));
      }
      add_burst(x, start + inhale, static_cast<std::size_t>(0.35 * rate), 0.1, 800.0, 6000.0, 1.2,
                rate, rng);
    }
  }
  // Recording floor, so no excerpt is ever digitally silent.
  for (double& v : x) v += 1e-3 * normal(rng);
  normalize_peak(x, 0.5);
  return x;
}

}  // namespace

NoiseBank::NoiseBank(std::map<std::string, Waveform> entries) : entries_(std::move(entries)) {
  for (const auto& [id, w] : entries_) {
    if (id.empty()) throw ArgumentError("noise bank: empty noise_id");
    if (w.empty()) throw ArgumentError("noise bank: entry '" + id + "' is empty");
  }
}

NoiseBank NoiseBank::synthetic(std::uint64_t seed, int sample_rate_hz, std::size_t length) {
  std::map<std::string, Waveform> entries;
  for (std::size_t k = 0; k < kEnvNoiseIds.size(); ++k) {
    Rng rng(derive_seed(seed, {k}));
    entries.emplace(std::string(kEnvNoiseIds[k]),
                    Waveform(synth_category(kEnvNoiseIds[k], length, sample_rate_hz, rng),
                             sample_rate_hz));
  }
  return NoiseBank(std::move(entries));
}

NoiseBank NoiseBank::load_directory(const std::filesystem::path& dir) {
  if (!std::filesystem::is_directory(dir)) throw IoError("noise bank: not a directory: " + dir.string());
  std::map<std::string, Waveform> entries;
  for (const auto& entry : std::filesystem::directory_iterator(dir)) {
    if (entry.path().extension() == ".wav") {
      entries.emplace(entry.path().stem().string(), read_wav(entry.path()));
    }
  }
  return NoiseBank(std::move(entries));
}

const Waveform& NoiseBank::at(const std::string& noise_id) const {
  auto it = entries_.find(noise_id);
  if (it == entries_.end()) throw LookupError("noise bank has no entry '" + noise_id + "'");
  return it->second;
}

std::vector<std::string> NoiseBank::ids() const {
  std::vector<std::string> out;
  out.reserve(entries_.size());
  for (const auto& [id, w] : entries_) out.push_back(id);
  return out;
}

}  // namespace cladlab
