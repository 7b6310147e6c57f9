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
#include <random>
#include <vector>

#include <gtest/gtest.h>
#include <nlohmann/json.hpp>

#include "cladlab/errors.hpp"
#include "cladlab/manipulations.hpp"
#include "oracles.hpp"

namespace cladlab {
namespace {

Waveform random_signal(std::mt19937_64& rng, std::size_t len) {
  std::normal_distribution<double> g(0.0, 0.3);
  Waveform w;
  w.samples.resize(len);
  for (auto& x : w.samples) x = g(rng);
  return w;
}

Waveform test_tone(std::size_t len = 16000) { return Waveform(oracle::tone(440.0, 16000.0, len), 16000); }

double added_power(const Waveform& out, const Waveform& in) {
  double s = 0.0;
  for (std::size_t i = 0; i < in.size(); ++i) {
    const double d = out.samples[i] - in.samples[i];
    s += d * d;
  }
  return s / static_cast<double>(in.size());
}

double power(const Waveform& w) {
  double s = 0.0;
  for (double x : w.samples) s += x * x;
  return s / static_cast<double>(w.size());
}

TEST(InjectNoise, TwentyDbMeansHundredthOfPower) {
  std::mt19937_64 rng(1);
  const Waveform w = random_signal(rng, 8000);
  const Waveform n = white_noise_source(8000, 9);
  const Waveform out = inject_noise(w, 20.0, n);
  EXPECT_NEAR(added_power(out, w), power(w) / 100.0, 1e-9 * power(w));
}

TEST(InjectNoise, AchievesRequestedSnrOnRandomSignals) {
  std::mt19937_64 rng(2);
  std::uniform_real_distribution<double> snr(-5.0, 40.0);
  for (int trial = 0; trial < 100; ++trial) {
    const Waveform w = random_signal(rng, 1000 + rng() % 3000);
    const Waveform n = white_noise_source(500 + rng() % 6000, rng());
    const double target = snr(rng);
    const Waveform out = inject_noise(w, target, n);
    ASSERT_EQ(out.size(), w.size());
    const double achieved = 10.0 * std::log10(power(w) / added_power(out, w));
    EXPECT_LE(std::abs(achieved - target), 0.1) << "trial " << trial;
  }
}

TEST(InjectNoise, EnvironmentalNoiseKeepsLength) {
  const NoiseBank bank = NoiseBank::synthetic(0);
  const Waveform w = test_tone(64600);
  const Waveform out = inject_noise(w, 15.0, bank.at("wind"));
  EXPECT_EQ(out.size(), w.size());
}

TEST(InjectNoise, ShortNoiseIsTiled) {
  const Waveform w({0.5, -0.5, 0.5, -0.5, 0.5}, 16000);
  const Waveform n({1.0, -2.0}, 16000);
  const Waveform out = inject_noise(w, 0.0, n);
  // Tiled noise [1,-2,1,-2,1], power 11/5; alpha^2 * 11/5 = 1/4.
  const double alpha = std::sqrt(0.25 / (11.0 / 5.0));
  const std::vector<double> tiled{1, -2, 1, -2, 1};
  for (std::size_t i = 0; i < 5; ++i) EXPECT_NEAR(out.samples[i], w.samples[i] + alpha * tiled[i], 1e-12);
}

TEST(InjectNoise, SilenceIsDomainError) {
  const Waveform silent(std::vector<double>(100, 0.0), 16000);
  const Waveform noise = white_noise_source(100, 1);
  EXPECT_THROW(inject_noise(silent, 10.0, noise), DomainError);
  EXPECT_THROW(inject_noise(noise, 10.0, silent), DomainError);
}

TEST(WhiteNoiseSource, DeterministicStandardNormal) {
  EXPECT_EQ(white_noise_source(1000, 5), white_noise_source(1000, 5));
  EXPECT_NE(white_noise_source(1000, 5), white_noise_source(1000, 6));
  const Waveform n = white_noise_source(1000000, 17);
  double mean = 0.0;
  for (double x : n.samples) mean += x;
  mean /= static_cast<double>(n.size());
  double var = 0.0;
  for (double x : n.samples) var += (x - mean) * (x - mean);
  var /= static_cast<double>(n.size() - 1);
  EXPECT_LE(std::abs(mean), 0.01);
  EXPECT_NEAR(var, 1.0, 0.02);
}

TEST(Volume, Examples) {
  const Waveform w = test_tone(1000);
  EXPECT_EQ(control_volume(w, 1.0), w);
  EXPECT_EQ(control_volume(Waveform({0.5, -0.25}, 16000), 0.5).samples, (std::vector<double>{0.25, -0.125}));
  std::vector<double> unit(oracle::tone(50.0, 16000.0, 16000, 1.0));
  const Waveform quiet = control_volume(Waveform(unit, 16000), 0.1);
  double peak_in = 0.0;
  double peak = 0.0;
  for (std::size_t i = 0; i < unit.size(); ++i) {
    peak_in = std::max(peak_in, std::abs(unit[i]));
    peak = std::max(peak, std::abs(quiet.samples[i]));
  }
  EXPECT_NEAR(peak, 0.1 * peak_in, 1e-15);
  EXPECT_NEAR(peak_in, 1.0, 1e-9);
}

TEST(Volume, CompositionIsExactForDyadicFactors) {
  std::mt19937_64 rng(4);
  const Waveform w = random_signal(rng, 4096);
  for (double a : {0.5, 0.25, 2.0, 0.125}) {
    for (double b : {0.5, 4.0, 0.0625}) {
      EXPECT_EQ(control_volume(control_volume(w, a), b), control_volume(w, a * b));
    }
  }
}

TEST(Volume, CompositionWithinOneUlpForGeneralFactors) {
  std::mt19937_64 rng(5);
  const Waveform w = random_signal(rng, 4096);
  const Waveform lhs = control_volume(control_volume(w, 0.1), 0.3);
  const Waveform rhs = control_volume(w, 0.1 * 0.3);
  for (std::size_t i = 0; i < w.size(); ++i) {
    EXPECT_LE(std::abs(lhs.samples[i] - rhs.samples[i]), 2.0 * std::abs(rhs.samples[i]) * 1.12e-16);
  }
}

TEST(TimeShift, Examples) {
  const Waveform w({1, 2, 3, 4}, 16000);
  EXPECT_EQ(time_shift(w, 1).samples, (std::vector<double>{4, 1, 2, 3}));
  EXPECT_EQ(time_shift(w, 4), w);
  EXPECT_EQ(time_shift(w, -1).samples, (std::vector<double>{2, 3, 4, 1}));
  EXPECT_EQ(time_shift(w, 9).samples, time_shift(w, 1).samples);
  const Waveform tone = test_tone(64600);
  EXPECT_EQ(time_shift(time_shift(tone, 16000), -16000), tone);
}

TEST(TimeShift, InverseForEveryShift) {
  std::mt19937_64 rng(6);
  const Waveform w = random_signal(rng, 97);
  for (std::int64_t s = -300; s <= 300; s += 7) EXPECT_EQ(time_shift(time_shift(w, s), -s), w) << s;
}

TEST(Echo, Examples) {
  EXPECT_EQ(add_echo(Waveform({1, 0, 0, 0}, 16000), 2, 0.5).samples, (std::vector<double>{1, 0, 0.5, 0}));
  const Waveform tone = test_tone(2000);
  EXPECT_EQ(add_echo(tone, 100, 0.0), tone);
  EXPECT_EQ(add_echo(tone, 5000, 0.7), tone);
  std::vector<double> impulse(16000, 0.0);
  impulse[0] = 1.0;
  const Waveform out = add_echo(Waveform(impulse, 16000), 1000, 0.2);
  for (std::size_t i = 0; i < out.size(); ++i) {
    const double expected = i == 0 ? 1.0 : (i == 1000 ? 0.2 : 0.0);
    EXPECT_EQ(out.samples[i], expected) << i;
  }
}

TEST(Echo, AttenuationOutOfRangeIsArgumentError) {
  EXPECT_THROW(add_echo(test_tone(100), 10, 1.5), ArgumentError);
  EXPECT_THROW(add_echo(test_tone(100), 10, -0.1), ArgumentError);
}

TEST(Apply, DispatchesToFamilyOperation) {
  const NoiseBank bank = NoiseBank::synthetic(1);
  const Waveform w = test_tone(4000);
  EXPECT_EQ(apply(ManipulationSpec{}, w, bank, 0), w);
  EXPECT_EQ(apply(VolumeParams{0.5}, w, bank, 0), control_volume(w, 0.5));
  EXPECT_EQ(apply(TimeShiftParams{123}, w, bank, 0), time_shift(w, 123));
  EXPECT_EQ(apply(EchoParams{300, 0.3}, w, bank, 0), add_echo(w, 300, 0.3));
  EXPECT_EQ(apply(FadeParams{0.3, FadeShape::kQuarterSine}, w, bank, 0), fade(w, 0.3, FadeShape::kQuarterSine));
}

TEST(Apply, MissingNoiseIdIsLookupError) {
  std::map<std::string, Waveform> entries;
  entries.emplace("wind", white_noise_source(1000, 1));
  const NoiseBank bank(entries);
  EXPECT_THROW(apply(EnvNoiseParams{20.0, "rain"}, test_tone(1000), bank, 0), LookupError);
  EXPECT_NO_THROW(apply(EnvNoiseParams{20.0, "wind"}, test_tone(1000), bank, 0));
}

TEST(Apply, EveryFamilyIsDeterministicAndFinite) {
  const NoiseBank bank = NoiseBank::synthetic(2);
  const Waveform w = test_tone(16000);
  const std::vector<ManipulationSpec> specs{
      WhiteNoiseParams{15.0},     EnvNoiseParams{20.0, "rain"}, VolumeParams{0.1},
      FadeParams{0.5, FadeShape::kHalfSine}, TimeStretchParams{1.1, 128}, ResampleParams{15500},
      TimeShiftParams{1600},      EchoParams{1000, 0.2},      ManipulationSpec{}};
  for (const auto& spec : specs) {
    const Waveform a = apply(spec, w, bank, 77);
    const Waveform b = apply(spec, w, bank, 77);
    EXPECT_EQ(a, b) << spec.tag();
    for (double x : a.samples) ASSERT_TRUE(std::isfinite(x)) << spec.tag();
    const Family f = spec.family();
    if (f != Family::kTimeStretch && f != Family::kResample) EXPECT_EQ(a.size(), w.size()) << spec.tag();
  }
}

TEST(Compose, Examples) {
  const NoiseBank bank = NoiseBank::synthetic(3);
  const Waveform w = test_tone(8000);
  EXPECT_EQ(compose({ManipulationSpec{}, ManipulationSpec{}}, w, bank, 0), w);
  const Waveform vv = compose({VolumeParams{0.1}, VolumeParams{10.0}}, w, bank, 0);
  for (std::size_t i = 0; i < w.size(); ++i) EXPECT_NEAR(vv.samples[i], w.samples[i], 1e-9);
}

TEST(Compose, MatchesStepwiseApplication) {
  const NoiseBank bank = NoiseBank::synthetic(4);
  const Waveform w = test_tone(16000);
  const std::uint64_t seed = 99;
  const Waveform composed =
      compose({FadeParams{0.5, FadeShape::kHalfSine}, WhiteNoiseParams{15.0}}, w, bank, seed);
  const Waveform faded = fade(w, 0.5, FadeShape::kHalfSine);
  const Waveform stepwise = apply(WhiteNoiseParams{15.0}, faded, bank, derive_seed(seed, {1}));
  EXPECT_EQ(composed, stepwise);
  EXPECT_EQ(compose({WhiteNoiseParams{15.0}}, w, bank, seed), apply(WhiteNoiseParams{15.0}, w, bank, seed));
}

TEST(Spec, TagRoundTrip) {
  const std::vector<ManipulationSpec> specs{
      WhiteNoiseParams{15.0},     EnvNoiseParams{20.0, "clock_tick"}, VolumeParams{0.1},
      FadeParams{0.5, FadeShape::kHalfSine}, TimeStretchParams{0.95, 128}, ResampleParams{17000},
      TimeShiftParams{-1600},     EchoParams{2000, 0.5},            ManipulationSpec{}};
  for (const auto& s : specs) {
    EXPECT_EQ(ManipulationSpec::parse(s.tag()), s) << s.tag();
    nlohmann::json j = s;
    EXPECT_EQ(j.get<ManipulationSpec>(), s) << j.dump();
  }
  EXPECT_EQ(ManipulationSpec::parse("fade:ratio=0.5,shape=half_sine"),
            (ManipulationSpec{FadeParams{0.5, FadeShape::kHalfSine}}));
}

TEST(Spec, ValidationRejectsOutOfRange) {
  EXPECT_THROW(ManipulationSpec(FadeParams{0.6, FadeShape::kLinear}).validate(), ArgumentError);
  EXPECT_THROW(ManipulationSpec(EchoParams{10, 1.2}).validate(), ArgumentError);
  EXPECT_THROW(ManipulationSpec(EchoParams{0, 0.2}).validate(), ArgumentError);
  EXPECT_THROW(ManipulationSpec(VolumeParams{-1.0}).validate(), ArgumentError);
  EXPECT_THROW(ManipulationSpec(TimeStretchParams{1.0, 127}).validate(), ArgumentError);
  EXPECT_THROW(ManipulationSpec(ResampleParams{0}).validate(), ArgumentError);
  EXPECT_THROW(ManipulationSpec::parse("warp:factor=2"), Error);
}

TEST(NoiseBank, SyntheticHasSevenCategories) {
  const NoiseBank bank = NoiseBank::synthetic(0);
  EXPECT_EQ(bank.size(), 7u);
  for (auto id : kEnvNoiseIds) {
    ASSERT_TRUE(bank.contains(std::string(id)));
    const Waveform& w = bank.at(std::string(id));
    EXPECT_FALSE(w.empty());
    EXPECT_GT(power(w), 0.0) << id;
  }
  EXPECT_THROW(bank.at("thunder"), LookupError);
}

}  // namespace
}  // namespace cladlab
