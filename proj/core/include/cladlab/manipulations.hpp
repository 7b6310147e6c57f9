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

#include <array>
#include <cstdint>
#include <map>
#include <optional>
#include <filesystem>
#include <string>
#include <string_view>
#include <utility>
#include <variant>
#include <vector>

#include <nlohmann/json_fwd.hpp>

#include "cladlab/audio.hpp"
#include "cladlab/rng.hpp"

namespace cladlab {

enum class Family {
  kIdentity,
  kWhiteNoise,
  kEnvNoise,
  kVolume,
  kFade,
  kTimeStretch,
  kResample,
  kTimeShift,
  kEcho,
};

// The eight attack families (everything except identity), in canonical order.
inline constexpr std::array<Family, 8> kAttackFamilies = {
    Family::kWhiteNoise, Family::kEnvNoise,  Family::kVolume,    Family::kFade,
    Family::kTimeStretch, Family::kResample, Family::kTimeShift, Family::kEcho};

enum class FadeShape { kLinear, kLogarithmic, kExponential, kQuarterSine, kHalfSine };

inline constexpr std::array<FadeShape, 5> kFadeShapes = {
    FadeShape::kLinear, FadeShape::kLogarithmic, FadeShape::kExponential,
    FadeShape::kQuarterSine, FadeShape::kHalfSine};

std::string_view to_string(Family f);
std::string_view to_string(FadeShape s);
Family parse_family(std::string_view name);
FadeShape parse_fade_shape(std::string_view name);

struct IdentityParams {
  bool operator==(const IdentityParams&) const = default;
};
struct WhiteNoiseParams {
  double snr_db = 20.0;
  bool operator==(const WhiteNoiseParams&) const = default;
};
struct EnvNoiseParams {
  double snr_db = 20.0;
  std::string noise_id = "wind";
  bool operator==(const EnvNoiseParams&) const = default;
};
struct VolumeParams {
  double factor = 1.0;
  bool operator==(const VolumeParams&) const = default;
};
struct FadeParams {
  double ratio = 0.0;
  FadeShape shape = FadeShape::kLinear;
  bool operator==(const FadeParams&) const = default;
};
struct TimeStretchParams {
  double factor = 1.0;
  int n_fft = 128;
  bool operator==(const TimeStretchParams&) const = default;
};
struct ResampleParams {
  int target_rate_hz = kDefaultSampleRateHz;
  bool operator==(const ResampleParams&) const = default;
};
struct TimeShiftParams {
  std::int64_t shift = 0;
  bool operator==(const TimeShiftParams&) const = default;
};
struct EchoParams {
  std::int64_t delay = 1000;
  double attenuation = 0.0;
  bool operator==(const EchoParams&) const = default;
};

using ManipulationParams =
    std::variant<IdentityParams, WhiteNoiseParams, EnvNoiseParams, VolumeParams, FadeParams,
                 TimeStretchParams, ResampleParams, TimeShiftParams, EchoParams>;

// One manipulation family plus its parameters. The family is the active
// variant alternative, so params can never disagree with it.
struct ManipulationSpec {
  ManipulationParams params;

  ManipulationSpec() = default;
  template <typename P>
    requires std::is_constructible_v<ManipulationParams, P>
  ManipulationSpec(P p) : params(std::move(p)) {}  // NOLINT(google-explicit-constructor)

  Family family() const;

  // Throws ArgumentError when a parameter is outside its documented range.
  void validate() const;

  // Compact textual form, e.g. "fade:ratio=0.5,shape=half_sine". parse()
  // accepts the same syntax and is its inverse.
  std::string tag() const;
  static ManipulationSpec parse(std::string_view tag);

  bool operator==(const ManipulationSpec&) const = default;
};

void to_json(nlohmann::json& j, const ManipulationSpec& spec);
void from_json(const nlohmann::json& j, ManipulationSpec& spec);

// Named environmental noise recordings. Immutable after construction.
class NoiseBank {
 public:
  NoiseBank() = default;
  explicit NoiseBank(std::map<std::string, Waveform> entries);

  // Band-shaped synthetic stand-ins for the seven ESC-50 categories used in
  // the evaluation grid: wind, footsteps, breathing, coughing, rain,
  // clock_tick, sneezing.
  static NoiseBank synthetic(std::uint64_t seed, int sample_rate_hz = kDefaultSampleRateHz,
                             std::size_t length = 5 * kDefaultSampleRateHz);

  // Loads <dir>/<noise_id>.wav for every .wav file in dir.
  static NoiseBank load_directory(const std::filesystem::path& dir);

  const Waveform& at(const std::string& noise_id) const;
  bool contains(const std::string& noise_id) const { return entries_.contains(noise_id); }
  std::vector<std::string> ids() const;
  std::size_t size() const noexcept { return entries_.size(); }

 private:
  std::map<std::string, Waveform> entries_;
};

inline const std::array<std::string_view, 7> kEnvNoiseIds = {
    "wind", "footsteps", "breathing", "coughing", "rain", "clock_tick", "sneezing"};

// --- Individual manipulations ---------------------------------------------

// i.i.d. N(0, 1) samples, deterministic given seed.
Waveform white_noise_source(std::size_t len, std::uint64_t seed,
                            int sample_rate_hz = kDefaultSampleRateHz);

// Adds noise (tiled or prefix-cropped to len(w)) scaled so that
// 10*log10(P_signal / P_added) == snr_db.
Waveform inject_noise(const Waveform& w, double snr_db, const Waveform& noise);

Waveform control_volume(const Waveform& w, double factor);

// Gain in [0, 1] of the fade-in mask at normalized position t in [0, 1].
double fade_gain(FadeShape shape, double t);
// Fade-in mask of the given length (t_i = i / (len - 1)).
std::vector<double> fade_in_mask(FadeShape shape, std::size_t len);
Waveform fade(const Waveform& w, double ratio, FadeShape shape);

// Phase-vocoder time stretch (Hann window, hop n_fft / 2, identity phase
// locking); output length round(len * factor).
Waveform time_stretch(const Waveform& w, double factor, int n_fft = 128);

// Kaiser-windowed sinc polyphase resampling. The returned waveform keeps the
// source sample rate: the detector consumes the samples as if nothing changed.
Waveform resample(const Waveform& w, int target_rate_hz);

// Same filter, but the result is labelled with target_rate_hz. Used when
// conforming files at foreign rates to the project rate.
Waveform convert_rate(const Waveform& w, int target_rate_hz);

// Circular shift, y[n] = x[(n - shift) mod L].
Waveform time_shift(const Waveform& w, std::int64_t shift);

Waveform add_echo(const Waveform& w, std::int64_t delay, double attenuation);

// Dispatches to the family operation. seed only feeds noise generation.
Waveform apply(const ManipulationSpec& spec, const Waveform& w, const NoiseBank& bank,
               std::uint64_t seed);

// Left-to-right application. Step 0 uses seed itself, step k > 0 uses
// derive_seed(seed, {k}), so compose({s}) == apply(s).
Waveform compose(const std::vector<ManipulationSpec>& specs, const Waveform& w,
                 const NoiseBank& bank, std::uint64_t seed);

// --- Augmentation -----------------------------------------------------------

struct RealRange {
  double lo = 0.0;
  double hi = 0.0;
};
struct IntRange {
  std::int64_t lo = 0;
  std::int64_t hi = 0;
};

// Sampling ranges for every family. Defaults span the evaluation grids.
struct ParameterRanges {
  RealRange white_noise_snr_db{15.0, 25.0};
  RealRange env_noise_snr_db{20.0, 20.0};
  std::vector<std::string> env_noise_ids;  // empty: every id in the bank
  RealRange volume_factor{0.1, 0.5};
  RealRange fade_ratio{0.1, 0.5};
  std::vector<FadeShape> fade_shapes{kFadeShapes.begin(), kFadeShapes.end()};
  RealRange stretch_factor{0.9, 1.1};
  int stretch_n_fft = 128;
  IntRange resample_rate_hz{15000, 17000};
  // Drawn rates are multiples of this step, which bounds the polyphase
  // filter bank size.
  int resample_rate_step_hz = 50;
  IntRange time_shift{1600, 32000};
  IntRange echo_delay{1000, 2000};
  RealRange echo_attenuation{0.2, 0.5};
};

struct AugmentationPolicy {
  std::vector<Family> enabled_families{kAttackFamilies.begin(), kAttackFamilies.end()};
  ParameterRanges ranges;
  std::uint64_t seed = 0;
  // Manipulations chained per view.
  int chain_depth = 1;

  void validate() const;
  // Copy with one family removed (leave-one-out training).
  AugmentationPolicy without(Family f) const;
};

void to_json(nlohmann::json& j, const AugmentationPolicy& p);
void from_json(const nlohmann::json& j, AugmentationPolicy& p);

struct AugmentedView {
  Waveform audio;
  std::vector<ManipulationSpec> applied;
};

// Draws a family uniformly from the enabled set and its parameters uniformly
// from the ranges, then applies it. The rng is advanced; nothing else.
ManipulationSpec sample_spec(const AugmentationPolicy& policy, const NoiseBank& bank, Rng& rng);
AugmentedView sample_view(const AugmentationPolicy& policy, const Waveform& w,
                          const NoiseBank& bank, Rng& rng);

// Default grids used by the evaluation sweeps.
std::vector<ManipulationSpec> default_eval_grid(const NoiseBank& bank);
// {VC 0.1, WN 15dB, EN wind, TS 0.9, FD .5/half-sine, RS 17k}
std::vector<ManipulationSpec> representative_specs();
// One representative attack per family, used by the leave-one-out study.
ManipulationSpec representative_spec(Family f);

}  // namespace cladlab
