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

#include <span>
#include <string>
#include <vector>

#include <nlohmann/json_fwd.hpp>

namespace cladlab {

// Scores are probabilities of being real. A score strictly greater than the
// threshold is classified real; equality counts as fake.
struct ScoreSet {
  std::vector<double> real_scores;
  std::vector<double> fake_scores;
};

enum class ThresholdSource { kEerOnClean, kManual };

struct Threshold {
  double value = 0.5;
  ThresholdSource source = ThresholdSource::kManual;
};

void to_json(nlohmann::json& j, const Threshold& t);
void from_json(const nlohmann::json& j, Threshold& t);

double far(std::span<const double> fake_scores, double t);
double frr(std::span<const double> real_scores, double t);
inline double far(std::span<const double> fake_scores, const Threshold& t) { return far(fake_scores, t.value); }
inline double frr(std::span<const double> real_scores, const Threshold& t) { return frr(real_scores, t.value); }

struct DetPoint {
  double threshold = 0.0;
  double far = 0.0;
  double frr = 0.0;
};

// (FAR, FRR) at -inf, at every midpoint between consecutive distinct pooled
// scores, and at +inf, ordered by threshold.
std::vector<DetPoint> det_points(const ScoreSet& scores);

struct EerResult {
  double eer = 0.0;
  // Candidate threshold nearest the crossing (smallest |FAR - FRR|, the higher
  // one on ties). Classifying with it reproduces the bracketing FAR/FRR.
  double threshold = 0.0;
  double far_at_threshold = 0.0;
  double frr_at_threshold = 0.0;
  // Largest adjacent jump of either empirical curve over the sweep.
  double step_bound = 0.0;
};

// Linear interpolation between the two candidates bracketing the sign change
// of FAR - FRR.
EerResult eer(const ScoreSet& scores);

enum class F1Positive { kReal, kFake };

// 2TP / (2TP + FP + FN); 0 when the denominator vanishes.
double f1(const ScoreSet& scores, double t, F1Positive positive = F1Positive::kReal);

std::string to_string(F1Positive p);
F1Positive f1_positive_from_string(std::string_view s);

}  // namespace cladlab
