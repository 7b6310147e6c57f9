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
#include <vector>

#include <gtest/gtest.h>

#include "cladlab/audio.hpp"
#include "cladlab/errors.hpp"
#include "cladlab/manipulations.hpp"
#include "oracles.hpp"

namespace cladlab {
namespace {

Waveform tone(double f, std::size_t len) { return Waveform(oracle::tone(f, 16000.0, len), 16000); }

TEST(TimeStretch, UnitFactorKeepsLengthWithinOneHop) {
  const Waveform w = tone(440.0, 16000);
  const Waveform out = time_stretch(w, 1.0, 128);
  EXPECT_LE(std::abs(static_cast<long>(out.size()) - 16000L), 64L);
}

TEST(TimeStretch, LengthFollowsFactor) {
  const Waveform w = tone(300.0, 16000);
  for (double factor : {0.9, 0.95, 1.05, 1.1}) {
    const Waveform out = time_stretch(w, factor, 128);
    EXPECT_LE(std::abs(static_cast<double>(out.size()) - std::round(16000.0 * factor)), 64.0) << factor;
    for (double x : out.samples) ASSERT_TRUE(std::isfinite(x));
  }
}

TEST(TimeStretch, PreservesPitch) {
  const Waveform w = tone(440.0, 16000);
  for (double factor : {0.9, 0.95, 1.05, 1.1}) {
    const Waveform out = time_stretch(w, factor, 128);
    // Skip the window ramp at either edge.
    std::vector<double> mid(out.samples.begin() + 512, out.samples.end() - 512);
    EXPECT_NEAR(oracle::spectral_peak_hz(mid, 16000.0, 200.0, 2000.0), 440.0, 5.0) << factor;
  }
}

// A stationary tone keeps its level: lengthening revisits analysis frames,
// which must not scramble the phase relation between neighbouring bins.
TEST(TimeStretch, PreservesLevelOfStationaryTones) {
  for (double f : {180.0, 440.0, 3000.0}) {
    const Waveform w = tone(f, 16000);
    const double rms_in = std::sqrt(measure_power(w).mean_square_power);
    for (double factor : {0.9, 1.05, 1.1}) {
      const Waveform out = time_stretch(w, factor, 128);
      const std::vector<double> mid(out.samples.begin() + 512, out.samples.end() - 512);
      EXPECT_NEAR(std::sqrt(measure_power(mid).mean_square_power), rms_in, 0.02 * rms_in) << f << " Hz x" << factor;
    }
  }
}

TEST(TimeStretch, ShortInputIsArgumentError) {
  EXPECT_THROW(time_stretch(tone(440.0, 100), 1.1, 128), ArgumentError);
}

TEST(TimeStretch, Deterministic) {
  const Waveform w = tone(523.0, 8000);
  EXPECT_EQ(time_stretch(w, 1.05, 128), time_stretch(w, 1.05, 128));
}

}  // namespace
}  // namespace cladlab
