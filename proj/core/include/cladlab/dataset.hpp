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
#include <string>
#include <vector>

#include <nlohmann/json_fwd.hpp>

#include "cladlab/audio.hpp"

namespace cladlab {

struct LabeledSample {
  std::string id;
  int label = 0;  // 1 real, 0 fake
  Waveform audio;
  std::string system_id = "-";
};

using Dataset = std::vector<LabeledSample>;

struct ClassCounts {
  std::size_t real = 0;
  std::size_t fake = 0;
};
ClassCounts count_classes(const Dataset& data);

// Desk-scale stand-in for a bonafide/spoof corpus.
struct SynthConfig {
  std::size_t n_train = 2000;
  std::size_t n_eval = 500;
  double real_fraction = 0.1;
  std::size_t duration_samples = 16000;
  int sample_rate_hz = kDefaultSampleRateHz;
  std::uint64_t seed = 0;

  void validate() const;
};

void to_json(nlohmann::json& j, const SynthConfig& c);
void from_json(const nlohmann::json& j, SynthConfig& c);

struct SynthSplit {
  Dataset train;
  Dataset eval;
};

// "Real" clips are five-harmonic stacks (1/k amplitudes) with 5 Hz vibrato;
// "fake" clips drop the vibrato, use 1/k^2 amplitudes and reset the phase
// every 512 samples. Both get an attack/decay envelope, white noise at 30 dB
// and peak normalization to 0.9. Exactly round(n * real_fraction) reals per
// split.
SynthSplit generate_synthetic(const SynthConfig& cfg);

// Generates a single clip; exposed for tests.
Waveform synth_clip(bool real, std::size_t len, int sample_rate_hz, std::uint64_t seed);

struct ProtocolEntry {
  std::string speaker_id;
  std::string utterance_id;
  std::string system_id;
  int label = 0;
  bool operator==(const ProtocolEntry&) const = default;
};

// Five whitespace-separated columns: speaker, utterance, '-', system, key.
std::vector<ProtocolEntry> parse_protocol_file(const std::filesystem::path& file);
void write_protocol_file(const std::vector<ProtocolEntry>& entries, const std::filesystem::path& file);

// Reads <dir>/protocol.txt (or the single *.txt in dir) and resolves each
// utterance to <dir>/wav/<id>.wav or <dir>/<id>.wav.
Dataset parse_protocol(const std::filesystem::path& dir);

// Writes <dir>/protocol.txt and <dir>/wav/<id>.wav for every sample.
void write_protocol_dataset(const Dataset& data, const std::filesystem::path& dir);

}  // namespace cladlab
