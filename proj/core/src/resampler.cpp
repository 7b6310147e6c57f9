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
#include <numeric>
#include <numbers>
#include <algorithm>
#include <cstdint>
#include <map>
#include <memory>
#include <mutex>
#include <utility>

#include "cladlab/errors.hpp"
#include "cladlab/manipulations.hpp"

namespace cladlab {
namespace {

// Kaiser-windowed sinc, 64 zero crossings per side.
constexpr double kKaiserBeta = 14.769656459379492;
constexpr double kZeroCrossings = 64.0;
constexpr double kRolloff = 0.9475937167399596;

double sinc(double x) {
  if (x == 0.0) return 1.0;
  const double px = std::numbers::pi * x;
  return std::sin(px) / px;
}

struct FilterBank {
  std::int64_t taps = 0;
  std::vector<std::vector<double>> phases;  // one filter per output phase
};

std::shared_ptr<const FilterBank> build_bank(std::int64_t q, int src, int dst) {
  const double cutoff = kRolloff * std::min(1.0, static_cast<double>(dst) / src);
  const double half_width = kZeroCrossings / cutoff;
  auto bank = std::make_shared<FilterBank>();
  bank->taps = static_cast<std::int64_t>(std::ceil(half_width)) + 1;
  const std::int64_t taps = bank->taps;
  const double i0_beta = std::cyl_bessel_i(0.0, kKaiserBeta);
  bank->phases.resize(static_cast<std::size_t>(q));
  for (std::int64_t phase = 0; phase < q; ++phase) {
    auto& h = bank->phases[static_cast<std::size_t>(phase)];
    h.resize(static_cast<std::size_t>(2 * taps + 1));
    const double frac = static_cast<double>(phase) / static_cast<double>(q);
    for (std::int64_t j = -taps; j <= taps; ++j) {
      const double t = static_cast<double>(j) - frac;
      const double r = t / half_width;
      double v = 0.0;
      if (std::abs(r) <= 1.0) {
        v = cutoff * sinc(cutoff * t) *
            std::cyl_bessel_i(0.0, kKaiserBeta * std::sqrt(1.0 - r * r)) / i0_beta;
      }
      h[static_cast<std::size_t>(j + taps)] = v;
    }
  }
  return bank;
}

// Filter banks are pure functions of the rate pair; keep the recent ones.
std::shared_ptr<const FilterBank> cached_bank(std::int64_t q, int src, int dst) {
  static std::mutex mu;
  static std::map<std::pair<int, int>, std::shared_ptr<const FilterBank>> cache;
  constexpr std::size_t kMaxEntries = 256;
  {
    std::lock_guard<std::mutex> lock(mu);
    auto it = cache.find({src, dst});
    if (it != cache.end()) return it->second;
  }
  auto bank = build_bank(q, src, dst);
  std::lock_guard<std::mutex> lock(mu);
  if (cache.size() >= kMaxEntries) cache.clear();
  cache.emplace(std::make_pair(src, dst), bank);
  return bank;
}

std::vector<double> resample_samples(const std::vector<double>& x, int src, int dst) {
  const int g = std::gcd(src, dst);
  const std::int64_t p = src / g;
  const std::int64_t q = dst / g;
  const auto len = static_cast<std::int64_t>(x.size());
  const std::int64_t out_len = (2 * len * q + p) / (2 * p);
  const std::shared_ptr<const FilterBank> bank = cached_bank(q, src, dst);
  const std::int64_t taps = bank->taps;

  std::vector<double> y(static_cast<std::size_t>(out_len), 0.0);
  for (std::int64_t m = 0; m < out_len; ++m) {
    const std::int64_t num = m * p;
    const std::int64_t n0 = num / q;
    const auto& h = bank->phases[static_cast<std::size_t>(num % q)];
    const std::int64_t lo = std::max<std::int64_t>(-taps, -n0);
    const std::int64_t hi = std::min<std::int64_t>(taps, len - 1 - n0);
    double acc = 0.0;
    for (std::int64_t j = lo; j <= hi; ++j) {
      acc += x[static_cast<std::size_t>(n0 + j)] * h[static_cast<std::size_t>(j + taps)];
    }
    y[static_cast<std::size_t>(m)] = acc;
  }
  return y;
}

}  // namespace

Waveform resample(const Waveform& w, int target_rate_hz) {
  if (target_rate_hz <= 0) throw ArgumentError("resample: target_rate_hz must be positive");
  if (w.sample_rate_hz <= 0) throw ArgumentError("resample: source rate must be positive");
  if (target_rate_hz == w.sample_rate_hz) return w;
  return Waveform(resample_samples(w.samples, w.sample_rate_hz, target_rate_hz), w.sample_rate_hz);
}

Waveform convert_rate(const Waveform& w, int target_rate_hz) {
  Waveform out = resample(w, target_rate_hz);
  out.sample_rate_hz = target_rate_hz;
  return out;
}

}  // namespace cladlab
