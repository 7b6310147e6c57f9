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

#include "cladlab/manipulations.hpp"

#include <charconv>
#include <cmath>
#include <map>
#include <sstream>

#include <nlohmann/json.hpp>

#include "cladlab/errors.hpp"

namespace cladlab {
namespace {

template <class... Ts>
struct Overloaded : Ts... {
  using Ts::operator()...;
};

constexpr std::array<std::pair<Family, std::string_view>, 9> kFamilyNames = {{
    {Family::kIdentity, "identity"},
    {Family::kWhiteNoise, "white_noise"},
    {Family::kEnvNoise, "env_noise"},
    {Family::kVolume, "volume"},
    {Family::kFade, "fade"},
    {Family::kTimeStretch, "time_stretch"},
    {Family::kResample, "resample"},
    {Family::kTimeShift, "time_shift"},
    {Family::kEcho, "echo"},
}};

constexpr std::array<std::pair<FadeShape, std::string_view>, 5> kShapeNames = {{
    {FadeShape::kLinear, "linear"},
    {FadeShape::kLogarithmic, "logarithmic"},
    {FadeShape::kExponential, "exponential"},
    {FadeShape::kQuarterSine, "quarter_sine"},
    {FadeShape::kHalfSine, "half_sine"},
}};

std::string format_number(double v) {
  char buf[64];
  auto [end, ec] = std::to_chars(buf, buf + sizeof(buf), v);
  return std::string(buf, end);
}

double parse_double(std::string_view key, std::string_view text) {
  double v = 0.0;
  auto [ptr, ec] = std::from_chars(text.data(), text.data() + text.size(), v);
  if (ec != std::errc() || ptr != text.data() + text.size()) {
    throw ParseError("manipulation spec: bad number for '" + std::string(key) + "': " +
                     std::string(text));
  }
  return v;
}

std::int64_t parse_int(std::string_view key, std::string_view text) {
  std::int64_t v = 0;
  auto [ptr, ec] = std::from_chars(text.data(), text.data() + text.size(), v);
  if (ec != std::errc() || ptr != text.data() + text.size()) {
    throw ParseError("manipulation spec: bad integer for '" + std::string(key) + "': " +
                     std::string(text));
  }
  return v;
}

using KeyValues = std::map<std::string, std::string, std::less<>>;

std::vector<std::pair<std::string, std::string>> spec_fields(const ManipulationSpec& spec) {
  return std::visit(
      Overloaded{
          [](const IdentityParams&) { return std::vector<std::pair<std::string, std::string>>{}; },
          [](const WhiteNoiseParams& p) {
            return std::vector<std::pair<std::string, std::string>>{{"snr_db", format_number(p.snr_db)}};
          },
          [](const EnvNoiseParams& p) {
            return std::vector<std::pair<std::string, std::string>>{
                {"snr_db", format_number(p.snr_db)}, {"noise_id", p.noise_id}};
          },
          [](const VolumeParams& p) {
            return std::vector<std::pair<std::string, std::string>>{{"factor", format_number(p.factor)}};
          },
          [](const FadeParams& p) {
            return std::vector<std::pair<std::string, std::string>>{
                {"ratio", format_number(p.ratio)}, {"shape", std::string(to_string(p.shape))}};
          },
          [](const TimeStretchParams& p) {
            return std::vector<std::pair<std::string, std::string>>{
                {"factor", format_number(p.factor)}, {"n_fft", std::to_string(p.n_fft)}};
          },
          [](const ResampleParams& p) {
            return std::vector<std::pair<std::string, std::string>>{
                {"target_rate_hz", std::to_string(p.target_rate_hz)}};
          },
          [](const TimeShiftParams& p) {
            return std::vector<std::pair<std::string, std::string>>{{"shift", std::to_string(p.shift)}};
          },
          [](const EchoParams& p) {
            return std::vector<std::pair<std::string, std::string>>{
                {"delay", std::to_string(p.delay)}, {"attenuation", format_number(p.attenuation)}};
          },
      },
      spec.params);
}

ManipulationSpec spec_from_fields(Family family, const KeyValues& kv) {
  std::map<std::string, bool, std::less<>> used;
  auto get = [&](std::string_view key) -> const std::string* {
    auto it = kv.find(key);
    if (it == kv.end()) return nullptr;
    used[std::string(key)] = true;
    return &it->second;
  };
  ManipulationSpec spec;
  switch (family) {
    case Family::kIdentity:
      spec = IdentityParams{};
      break;
    case Family::kWhiteNoise: {
      WhiteNoiseParams p;
      if (auto* v = get("snr_db")) p.snr_db = parse_double("snr_db", *v);
      spec = p;
      break;
    }
    case Family::kEnvNoise: {
      EnvNoiseParams p;
      if (auto* v = get("snr_db")) p.snr_db = parse_double("snr_db", *v);
      if (auto* v = get("noise_id")) p.noise_id = *v;
      spec = p;
      break;
    }
    case Family::kVolume: {
      VolumeParams p;
      if (auto* v = get("factor")) p.factor = parse_double("factor", *v);
      spec = p;
      break;
    }
    case Family::kFade: {
      FadeParams p;
      if (auto* v = get("ratio")) p.ratio = parse_double("ratio", *v);
      if (auto* v = get("shape")) p.shape = parse_fade_shape(*v);
      spec = p;
      break;
    }
    case Family::kTimeStretch: {
      TimeStretchParams p;
      if (auto* v = get("factor")) p.factor = parse_double("factor", *v);
      if (auto* v = get("n_fft")) p.n_fft = static_cast<int>(parse_int("n_fft", *v));
      spec = p;
      break;
    }
    case Family::kResample: {
      ResampleParams p;
      if (auto* v = get("target_rate_hz")) {
        p.target_rate_hz = static_cast<int>(parse_int("target_rate_hz", *v));
      }
      spec = p;
      break;
    }
    case Family::kTimeShift: {
      TimeShiftParams p;
      if (auto* v = get("shift")) p.shift = parse_int("shift", *v);
      spec = p;
      break;
    }
    case Family::kEcho: {
      EchoParams p;
      if (auto* v = get("delay")) p.delay = parse_int("delay", *v);
      if (auto* v = get("attenuation")) p.attenuation = parse_double("attenuation", *v);
      spec = p;
      break;
    }
  }
  for (const auto& [key, value] : kv) {
    if (!used.contains(key)) {
      throw ParseError("manipulation spec: unknown key '" + key + "' for family " +
                       std::string(to_string(family)));
    }
  }
  return spec;
}

}  // namespace

std::string_view to_string(Family f) {
  for (const auto& [fam, name] : kFamilyNames) {
    if (fam == f) return name;
  }
  return "unknown";
}

std::string_view to_string(FadeShape s) {
  for (const auto& [shape, name] : kShapeNames) {
    if (shape == s) return name;
  }
  return "unknown";
}

Family parse_family(std::string_view name) {
  for (const auto& [fam, n] : kFamilyNames) {
    if (n == name) return fam;
  }
  throw ParseError("unknown manipulation family '" + std::string(name) + "'");
}

FadeShape parse_fade_shape(std::string_view name) {
  for (const auto& [shape, n] : kShapeNames) {
    if (n == name) return shape;
  }
  throw ParseError("unknown fade shape '" + std::string(name) + "'");
}

Family ManipulationSpec::family() const {
  return std::visit(Overloaded{
                        [](const IdentityParams&) { return Family::kIdentity; },
                        [](const WhiteNoiseParams&) { return Family::kWhiteNoise; },
                        [](const EnvNoiseParams&) { return Family::kEnvNoise; },
                        [](const VolumeParams&) { return Family::kVolume; },
                        [](const FadeParams&) { return Family::kFade; },
                        [](const TimeStretchParams&) { return Family::kTimeStretch; },
                        [](const ResampleParams&) { return Family::kResample; },
                        [](const TimeShiftParams&) { return Family::kTimeShift; },
                        [](const EchoParams&) { return Family::kEcho; },
                    },
                    params);
}

void ManipulationSpec::validate() const {
  std::visit(Overloaded{
                 [](const IdentityParams&) {},
                 [](const WhiteNoiseParams& p) {
                   if (!std::isfinite(p.snr_db)) throw ArgumentError("white_noise: snr_db must be finite");
                 },
                 [](const EnvNoiseParams& p) {
                   if (!std::isfinite(p.snr_db)) throw ArgumentError("env_noise: snr_db must be finite");
                   if (p.noise_id.empty()) throw ArgumentError("env_noise: noise_id is empty");
                 },
                 [](const VolumeParams& p) {
                   if (!(p.factor >= 0.0) || !std::isfinite(p.factor)) {
                     throw ArgumentError("volume: factor must be a nonnegative real");
                   }
                 },
                 [](const FadeParams& p) {
                   if (!(p.ratio >= 0.0 && p.ratio <= 0.5)) {
                     throw ArgumentError("fade: ratio must lie in [0, 0.5]");
                   }
                 },
                 [](const TimeStretchParams& p) {
                   if (!(p.factor > 0.0) || !std::isfinite(p.factor)) {
                     throw ArgumentError("time_stretch: factor must be positive");
                   }
                   if (p.n_fft <= 0 || p.n_fft % 2 != 0) {
                     throw ArgumentError("time_stretch: n_fft must be a positive even integer");
                   }
                 },
                 [](const ResampleParams& p) {
                   if (p.target_rate_hz <= 0) throw ArgumentError("resample: target_rate_hz must be positive");
                 },
                 [](const TimeShiftParams&) {},
                 [](const EchoParams& p) {
                   if (p.delay <= 0) throw ArgumentError("echo: delay must be positive");
                   if (!(p.attenuation >= 0.0 && p.attenuation <= 1.0)) {
                     throw ArgumentError("echo: attenuation must lie in [0, 1]");
                   }
                 },
             },
             params);
}

std::string ManipulationSpec::tag() const {
  std::string out(to_string(family()));
  const auto fields = spec_fields(*this);
  for (std::size_t i = 0; i < fields.size(); ++i) {
    out += (i == 0 ? ':' : ',');
    out += fields[i].first + "=" + fields[i].second;
  }
  return out;
}

ManipulationSpec ManipulationSpec::parse(std::string_view tag) {
  const auto colon = tag.find(':');
  const Family family = parse_family(tag.substr(0, colon));
  KeyValues kv;
  if (colon != std::string_view::npos) {
    std::string_view rest = tag.substr(colon + 1);
    while (!rest.empty()) {
      const auto comma = rest.find(',');
      const std::string_view item = rest.substr(0, comma);
      const auto eq = item.find('=');
      if (eq == std::string_view::npos || eq == 0) {
        throw ParseError("manipulation spec: expected key=value, got '" + std::string(item) + "'");
      }
      kv.emplace(std::string(item.substr(0, eq)), std::string(item.substr(eq + 1)));
      if (comma == std::string_view::npos) break;
      rest = rest.substr(comma + 1);
    }
  }
  ManipulationSpec spec = spec_from_fields(family, kv);
  spec.validate();
  return spec;
}

void to_json(nlohmann::json& j, const ManipulationSpec& spec) {
  j = nlohmann::json::object();
  j["family"] = std::string(to_string(spec.family()));
  std::visit(Overloaded{
                 [](const IdentityParams&) {},
                 [&](const WhiteNoiseParams& p) { j["snr_db"] = p.snr_db; },
                 [&](const EnvNoiseParams& p) {
                   j["snr_db"] = p.snr_db;
                   j["noise_id"] = p.noise_id;
                 },
                 [&](const VolumeParams& p) { j["factor"] = p.factor; },
                 [&](const FadeParams& p) {
                   j["ratio"] = p.ratio;
                   j["shape"] = std::string(to_string(p.shape));
                 },
                 [&](const TimeStretchParams& p) {
                   j["factor"] = p.factor;
                   j["n_fft"] = p.n_fft;
                 },
                 [&](const ResampleParams& p) { j["target_rate_hz"] = p.target_rate_hz; },
                 [&](const TimeShiftParams& p) { j["shift"] = p.shift; },
                 [&](const EchoParams& p) {
                   j["delay"] = p.delay;
                   j["attenuation"] = p.attenuation;
                 },
             },
             spec.params);
}

void from_json(const nlohmann::json& j, ManipulationSpec& spec) {
  if (j.is_string()) {
    spec = ManipulationSpec::parse(j.get<std::string>());
    return;
  }
  const Family family = parse_family(j.at("family").get<std::string>());
  KeyValues kv;
  for (const auto& [key, value] : j.items()) {
    if (key == "family") continue;
    if (value.is_string()) {
      kv.emplace(key, value.get<std::string>());
    } else if (value.is_number_integer()) {
      kv.emplace(key, std::to_string(value.get<std::int64_t>()));
    } else {
      kv.emplace(key, format_number(value.get<double>()));
    }
  }
  spec = spec_from_fields(family, kv);
  spec.validate();
}

Waveform white_noise_source(std::size_t len, std::uint64_t seed, int sample_rate_hz) {
  if (len == 0) throw ArgumentError("white_noise_source: len must be positive");
  Rng rng(seed);
  std::normal_distribution<double> normal(0.0, 1.0);
  Waveform out;
  out.sample_rate_hz = sample_rate_hz;
  out.samples.resize(len);
  for (double& s : out.samples) s = normal(rng);
  return out;
}

Waveform inject_noise(const Waveform& w, double snr_db_target, const Waveform& noise) {
  if (w.empty()) throw ArgumentError("inject_noise: empty signal");
  if (noise.empty()) throw ArgumentError("inject_noise: empty noise");
  const double signal_power = measure_power(w).mean_square_power;
  if (signal_power == 0.0) throw DomainError("SNR undefined for silent signal");
  const Waveform shaped = fix_length(noise, w.size());
  const double noise_power = measure_power(shaped).mean_square_power;
  if (noise_power == 0.0) throw DomainError("SNR undefined for silent noise");
  const double target_noise_power = signal_power / std::pow(10.0, snr_db_target / 10.0);
  const double alpha = std::sqrt(target_noise_power / noise_power);
  Waveform out = w;
  for (std::size_t i = 0; i < out.size(); ++i) out.samples[i] += alpha * shaped.samples[i];
  return out;
}

Waveform control_volume(const Waveform& w, double factor) {
  Waveform out = w;
  for (double& s : out.samples) s *= factor;
  return out;
}

Waveform time_shift(const Waveform& w, std::int64_t shift) {
  if (w.empty()) return w;
  const auto len = static_cast<std::int64_t>(w.size());
  const std::int64_t r = ((shift % len) + len) % len;
  Waveform out = w;
  for (std::int64_t n = 0; n < len; ++n) {
    out.samples[static_cast<std::size_t>(n)] = w.samples[static_cast<std::size_t>((n - r + len) % len)];
  }
  return out;
}

Waveform add_echo(const Waveform& w, std::int64_t delay, double attenuation) {
  if (delay <= 0) throw ArgumentError("add_echo: delay must be positive");
  if (!(attenuation >= 0.0 && attenuation <= 1.0)) {
    throw ArgumentError("add_echo: attenuation must lie in [0, 1]");
  }
  Waveform out = w;
  const auto d = static_cast<std::size_t>(delay);
  for (std::size_t n = d; n < w.size(); ++n) out.samples[n] += attenuation * w.samples[n - d];
  return out;
}

Waveform apply(const ManipulationSpec& spec, const Waveform& w, const NoiseBank& bank,
               std::uint64_t seed) {
  spec.validate();
  return std::visit(
      Overloaded{
          [&](const IdentityParams&) { return w; },
          [&](const WhiteNoiseParams& p) {
            return inject_noise(w, p.snr_db, white_noise_source(w.size(), seed, w.sample_rate_hz));
          },
          [&](const EnvNoiseParams& p) { return inject_noise(w, p.snr_db, bank.at(p.noise_id)); },
          [&](const VolumeParams& p) { return control_volume(w, p.factor); },
          [&](const FadeParams& p) { return fade(w, p.ratio, p.shape); },
          [&](const TimeStretchParams& p) { return time_stretch(w, p.factor, p.n_fft); },
          [&](const ResampleParams& p) { return resample(w, p.target_rate_hz); },
          [&](const TimeShiftParams& p) { return time_shift(w, p.shift); },
          [&](const EchoParams& p) { return add_echo(w, p.delay, p.attenuation); },
      },
      spec.params);
}

Waveform compose(const std::vector<ManipulationSpec>& specs, const Waveform& w,
                 const NoiseBank& bank, std::uint64_t seed) {
  if (specs.empty()) throw ArgumentError("compose: empty manipulation list");
  Waveform out = w;
  for (std::size_t k = 0; k < specs.size(); ++k) {
    const std::uint64_t step_seed = k == 0 ? seed : derive_seed(seed, {k});
    out = apply(specs[k], out, bank, step_seed);
  }
  return out;
}

std::vector<ManipulationSpec> default_eval_grid(const NoiseBank& bank) {
  std::vector<ManipulationSpec> grid;
  grid.emplace_back(IdentityParams{});
  for (double f : {0.5, 0.1}) grid.emplace_back(VolumeParams{f});
  for (double snr : {15.0, 20.0, 25.0}) grid.emplace_back(WhiteNoiseParams{snr});
  for (std::string_view id : kEnvNoiseIds) {
    if (bank.contains(std::string(id))) grid.emplace_back(EnvNoiseParams{20.0, std::string(id)});
  }
  for (double f : {1.1, 1.05, 0.95, 0.9}) grid.emplace_back(TimeStretchParams{f, 128});
  grid.emplace_back(EchoParams{1000, 0.2});
  grid.emplace_back(EchoParams{1000, 0.5});
  grid.emplace_back(EchoParams{2000, 0.5});
  for (std::int64_t s : {1600, 16000, 32000}) grid.emplace_back(TimeShiftParams{s});
  for (double r : {0.5, 0.3, 0.1}) grid.emplace_back(FadeParams{r, FadeShape::kLinear});
  for (FadeShape shape : {FadeShape::kExponential, FadeShape::kQuarterSine, FadeShape::kHalfSine,
                          FadeShape::kLogarithmic}) {
    grid.emplace_back(FadeParams{0.5, shape});
  }
  for (int rate : {15000, 15500, 16500, 17000}) grid.emplace_back(ResampleParams{rate});
  return grid;
}

std::vector<ManipulationSpec> representative_specs() {
  return {VolumeParams{0.1},
          WhiteNoiseParams{15.0},
          EnvNoiseParams{20.0, "wind"},
          TimeStretchParams{0.9, 128},
          FadeParams{0.5, FadeShape::kHalfSine},
          ResampleParams{17000}};
}

ManipulationSpec representative_spec(Family f) {
  switch (f) {
    case Family::kIdentity:
      return IdentityParams{};
    case Family::kWhiteNoise:
      return WhiteNoiseParams{15.0};
    case Family::kEnvNoise:
      return EnvNoiseParams{20.0, "rain"};
    case Family::kVolume:
      return VolumeParams{0.1};
    case Family::kFade:
      return FadeParams{0.5, FadeShape::kHalfSine};
    case Family::kTimeStretch:
      return TimeStretchParams{0.9, 128};
    case Family::kResample:
      return ResampleParams{17000};
    case Family::kTimeShift:
      return TimeShiftParams{16000};
    case Family::kEcho:
      return EchoParams{1000, 0.2};
  }
  return IdentityParams{};
}

}  // namespace cladlab
