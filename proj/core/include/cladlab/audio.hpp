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
#include <vector>

namespace cladlab {

inline constexpr int kDefaultSampleRateHz = 16000;

// Mono audio. Amplitudes are nominally in [-1, 1] but are never clamped in
// memory; clamping happens only when quantizing to 16-bit PCM on write.
struct Waveform {
  std::vector<double> samples;
  int sample_rate_hz = kDefaultSampleRateHz;

  Waveform() = default;
  Waveform(std::vector<double> s, int rate) : samples(std::move(s)), sample_rate_hz(rate) {}

  std::size_t size() const noexcept { return samples.size(); }
  bool empty() const noexcept { return samples.empty(); }
  std::span<const double> view() const noexcept { return samples; }

  bool operator==(const Waveform&) const = default;
};

struct PowerStats {
  double mean_square_power = 0.0;
  double peak_abs = 0.0;
};

// Throws ArgumentError if the waveform is empty, has a nonpositive rate, or
// carries a non-finite sample.
void check_waveform(const Waveform& w);

// Reads a RIFF/WAVE file holding 16-bit signed PCM mono. Sample v maps to
// v / 32768 exactly. Throws FormatError naming the offending field.
Waveform read_wav(const std::filesystem::path& path);

// Writes 16-bit PCM mono; amplitude a is stored as clamp(round(a*32768)).
void write_wav(const Waveform& w, const std::filesystem::path& path);

// Quantization used by write_wav, exposed for tests and tools.
std::int16_t quantize_sample(double amplitude) noexcept;

// Tiles short inputs end-to-end and keeps the prefix of long inputs so the
// result has exactly target_len samples.
Waveform fix_length(const Waveform& w, std::size_t target_len);

PowerStats measure_power(std::span<const double> samples);
inline PowerStats measure_power(const Waveform& w) { return measure_power(w.view()); }

// 10*log10(signal_power / noise_power).
double snr_db(double signal_power, double noise_power);

}  // namespace cladlab
