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

#include <nlohmann/json.hpp>

#include "cladlab/errors.hpp"
#include "cladlab/manipulations.hpp"

namespace cladlab {
namespace {

void check_range(const RealRange& r, const char* name) {
  if (!(r.lo <= r.hi)) throw ArgumentError(std::string("augmentation: empty range for ") + name);
}
void check_range(const IntRange& r, const char* name) {
  if (r.lo > r.hi) throw ArgumentError(std::string("augmentation: empty range for ") + name);
}

double draw(const RealRange& r, Rng& rng) {
  if (r.lo == r.hi) return r.lo;
  return std::uniform_real_distribution<double>(r.lo, r.hi)(rng);
}
std::int64_t draw(const IntRange& r, Rng& rng) {
  return std::uniform_int_distribution<std::int64_t>(r.lo, r.hi)(rng);
}

template <typename T>
const T& pick(const std::vector<T>& v, Rng& rng) {
  return v[std::uniform_int_distribution<std::size_t>(0, v.size() - 1)(rng)];
}

nlohmann::json range_json(const RealRange& r) { return {r.lo, r.hi}; }
nlohmann::json range_json(const IntRange& r) { return {r.lo, r.hi}; }
void read_range(const nlohmann::json& j, const char* key, RealRange& r) {
  if (j.contains(key)) r = {j.at(key).at(0).get<double>(), j.at(key).at(1).get<double>()};
}
void read_range(const nlohmann::json& j, const char* key, IntRange& r) {
  if (j.contains(key)) r = {j.at(key).at(0).get<std::int64_t>(), j.at(key).at(1).get<std::int64_t>()};
}

}  // namespace

void AugmentationPolicy::validate() const {
  if (enabled_families.empty()) throw ArgumentError("augmentation: no family enabled");
  if (chain_depth < 1) throw ArgumentError("augmentation: chain_depth must be >= 1");
  const ParameterRanges& r = ranges;
  check_range(r.white_noise_snr_db, "white_noise_snr_db");
  check_range(r.env_noise_snr_db, "env_noise_snr_db");
  check_range(r.volume_factor, "volume_factor");
  check_range(r.fade_ratio, "fade_ratio");
  check_range(r.stretch_factor, "stretch_factor");
  check_range(r.resample_rate_hz, "resample_rate_hz");
  check_range(r.time_shift, "time_shift");
  check_range(r.echo_delay, "echo_delay");
  check_range(r.echo_attenuation, "echo_attenuation");
  if (r.volume_factor.lo < 0.0) throw ArgumentError("augmentation: negative volume factor");
  if (r.fade_ratio.lo < 0.0 || r.fade_ratio.hi > 0.5) {
    throw ArgumentError("augmentation: fade ratio outside [0, 0.5]");
  }
  if (r.fade_shapes.empty()) throw ArgumentError("augmentation: no fade shape");
  if (!(r.stretch_factor.lo > 0.0)) throw ArgumentError("augmentation: stretch factor must be positive");
  if (r.stretch_n_fft <= 0 || r.stretch_n_fft % 2 != 0) {
    throw ArgumentError("augmentation: stretch n_fft must be positive and even");
  }
  if (r.resample_rate_hz.lo <= 0) throw ArgumentError("augmentation: resample rate must be positive");
  if (r.resample_rate_step_hz <= 0) throw ArgumentError("augmentation: resample rate step must be positive");
  {
    const std::int64_t step = r.resample_rate_step_hz;
    if ((r.resample_rate_hz.lo + step - 1) / step > r.resample_rate_hz.hi / step) {
      throw ArgumentError("augmentation: no multiple of the resample step inside the rate range");
    }
  }
  if (r.echo_delay.lo <= 0) throw ArgumentError("augmentation: echo delay must be positive");
  if (r.echo_attenuation.lo < 0.0 || r.echo_attenuation.hi > 1.0) {
    throw ArgumentError("augmentation: echo attenuation outside [0, 1]");
  }
}

AugmentationPolicy AugmentationPolicy::without(Family f) const {
  AugmentationPolicy out = *this;
  std::erase(out.enabled_families, f);
  return out;
}

ManipulationSpec sample_spec(const AugmentationPolicy& policy, const NoiseBank& bank, Rng& rng) {
  const ParameterRanges& r = policy.ranges;
  switch (pick(policy.enabled_families, rng)) {
    case Family::kIdentity:
      return IdentityParams{};
    case Family::kWhiteNoise:
      return WhiteNoiseParams{draw(r.white_noise_snr_db, rng)};
    case Family::kEnvNoise: {
      const std::vector<std::string> ids = r.env_noise_ids.empty() ? bank.ids() : r.env_noise_ids;
      if (ids.empty()) throw LookupError("augmentation: env_noise enabled but noise bank is empty");
      const double snr = draw(r.env_noise_snr_db, rng);
      return EnvNoiseParams{snr, pick(ids, rng)};
    }
    case Family::kVolume:
      return VolumeParams{draw(r.volume_factor, rng)};
    case Family::kFade: {
      const double ratio = draw(r.fade_ratio, rng);
      return FadeParams{ratio, pick(r.fade_shapes, rng)};
    }
    case Family::kTimeStretch:
      return TimeStretchParams{draw(r.stretch_factor, rng), r.stretch_n_fft};
    case Family::kResample: {
      const std::int64_t step = r.resample_rate_step_hz;
      const IntRange k{(r.resample_rate_hz.lo + step - 1) / step, r.resample_rate_hz.hi / step};
      return ResampleParams{static_cast<int>(draw(k, rng) * step)};
    }
    case Family::kTimeShift:
      return TimeShiftParams{draw(r.time_shift, rng)};
    case Family::kEcho: {
      const std::int64_t delay = draw(r.echo_delay, rng);
      return EchoParams{delay, draw(r.echo_attenuation, rng)};
    }
  }
  return IdentityParams{};
}

AugmentedView sample_view(const AugmentationPolicy& policy, const Waveform& w,
                          const NoiseBank& bank, Rng& rng) {
  AugmentedView view{w, {}};
  for (int d = 0; d < policy.chain_depth; ++d) {
    ManipulationSpec spec = sample_spec(policy, bank, rng);
    const std::uint64_t noise_seed = rng();
    view.audio = apply(spec, view.audio, bank, noise_seed);
    view.applied.push_back(std::move(spec));
  }
  return view;
}

void to_json(nlohmann::json& j, const AugmentationPolicy& p) {
  std::vector<std::string> families;
  for (Family f : p.enabled_families) families.emplace_back(to_string(f));
  std::vector<std::string> shapes;
  for (FadeShape s : p.ranges.fade_shapes) shapes.emplace_back(to_string(s));
  const ParameterRanges& r = p.ranges;
  j = {{"enabled_families", families},
       {"seed", p.seed},
       {"chain_depth", p.chain_depth},
       {"ranges",
        {{"white_noise_snr_db", range_json(r.white_noise_snr_db)},
         {"env_noise_snr_db", range_json(r.env_noise_snr_db)},
         {"env_noise_ids", r.env_noise_ids},
         {"volume_factor", range_json(r.volume_factor)},
         {"fade_ratio", range_json(r.fade_ratio)},
         {"fade_shapes", shapes},
         {"stretch_factor", range_json(r.stretch_factor)},
         {"stretch_n_fft", r.stretch_n_fft},
         {"resample_rate_hz", range_json(r.resample_rate_hz)},
         {"resample_rate_step_hz", r.resample_rate_step_hz},
         {"time_shift", range_json(r.time_shift)},
         {"echo_delay", range_json(r.echo_delay)},
         {"echo_attenuation", range_json(r.echo_attenuation)}}}};
}

void from_json(const nlohmann::json& j, AugmentationPolicy& p) {
  p = AugmentationPolicy{};
  if (j.contains("enabled_families")) {
    p.enabled_families.clear();
    for (const auto& f : j.at("enabled_families")) p.enabled_families.push_back(parse_family(f.get<std::string>()));
  }
  p.seed = j.value("seed", p.seed);
  p.chain_depth = j.value("chain_depth", p.chain_depth);
  if (j.contains("ranges")) {
    const auto& rj = j.at("ranges");
    ParameterRanges& r = p.ranges;
    read_range(rj, "white_noise_snr_db", r.white_noise_snr_db);
    read_range(rj, "env_noise_snr_db", r.env_noise_snr_db);
    if (rj.contains("env_noise_ids")) r.env_noise_ids = rj.at("env_noise_ids").get<std::vector<std::string>>();
    read_range(rj, "volume_factor", r.volume_factor);
    read_range(rj, "fade_ratio", r.fade_ratio);
    if (rj.contains("fade_shapes")) {
      r.fade_shapes.clear();
      for (const auto& s : rj.at("fade_shapes")) r.fade_shapes.push_back(parse_fade_shape(s.get<std::string>()));
    }
    read_range(rj, "stretch_factor", r.stretch_factor);
    r.stretch_n_fft = rj.value("stretch_n_fft", r.stretch_n_fft);
    read_range(rj, "resample_rate_hz", r.resample_rate_hz);
    r.resample_rate_step_hz = rj.value("resample_rate_step_hz", r.resample_rate_step_hz);
    read_range(rj, "time_shift", r.time_shift);
    read_range(rj, "echo_delay", r.echo_delay);
    read_range(rj, "echo_attenuation", r.echo_attenuation);
  }
  p.validate();
}

}  // namespace cladlab
