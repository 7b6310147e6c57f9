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

#include "cladlab/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include <nlohmann/json.hpp>

#include "cladlab/errors.hpp"

namespace cladlab {
namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

void check_population(std::span<const double> s, const char* what) {
  if (s.empty()) throw ArgumentError(std::string(what) + " scores are empty");
  for (double v : s) {
    if (std::isnan(v)) throw ArgumentError(std::string(what) + " scores contain NaN");
  }
}

std::vector<double> sorted_copy(std::span<const double> s) {
  std::vector<double> v(s.begin(), s.end());
  std::sort(v.begin(), v.end());
  return v;
}

// Number of sorted values <= t.
double count_at_most(const std::vector<double>& sorted, double t) {
  return static_cast<double>(std::upper_bound(sorted.begin(), sorted.end(), t) - sorted.begin());
}

}  // namespace

double far(std::span<const double> fake_scores, double t) {
  check_population(fake_scores, "fake");
  const auto accepted = std::count_if(fake_scores.begin(), fake_scores.end(),
                                      [t](double s) { return s > t; });
  return static_cast<double>(accepted) / static_cast<double>(fake_scores.size());
}

double frr(std::span<const double> real_scores, double t) {
  check_population(real_scores, "real");
  const auto rejected = std::count_if(real_scores.begin(), real_scores.end(),
                                      [t](double s) { return s <= t; });
  return static_cast<double>(rejected) / static_cast<double>(real_scores.size());
}

std::vector<DetPoint> det_points(const ScoreSet& scores) {
  check_population(scores.real_scores, "real");
  check_population(scores.fake_scores, "fake");
  const std::vector<double> reals = sorted_copy(scores.real_scores);
  const std::vector<double> fakes = sorted_copy(scores.fake_scores);
  std::vector<double> pooled;
  pooled.reserve(reals.size() + fakes.size());
  std::merge(reals.begin(), reals.end(), fakes.begin(), fakes.end(), std::back_inserter(pooled));
  pooled.erase(std::unique(pooled.begin(), pooled.end()), pooled.end());

  std::vector<double> thresholds;
  thresholds.reserve(pooled.size() + 1);
  thresholds.push_back(-kInf);
  for (std::size_t i = 0; i + 1 < pooled.size(); ++i) {
    double mid = pooled[i] + (pooled[i + 1] - pooled[i]) / 2.0;
    // Adjacent doubles: keep the threshold inside [lo, hi) so it splits them.
    if (!(mid < pooled[i + 1])) mid = pooled[i];
    thresholds.push_back(mid);
  }
  thresholds.push_back(kInf);

  const double nr = static_cast<double>(reals.size());
  const double nf = static_cast<double>(fakes.size());
  std::vector<DetPoint> out;
  out.reserve(thresholds.size());
  for (double t : thresholds) {
    out.push_back({t, (nf - count_at_most(fakes, t)) / nf, count_at_most(reals, t) / nr});
  }
  return out;
}

EerResult eer(const ScoreSet& scores) {
  const std::vector<DetPoint> pts = det_points(scores);
  EerResult r;
  for (std::size_t k = 1; k < pts.size(); ++k) {
    r.step_bound = std::max({r.step_bound, std::abs(pts[k].far - pts[k - 1].far),
                             std::abs(pts[k].frr - pts[k - 1].frr)});
  }
  std::size_t j = 1;
  while (j < pts.size() && pts[j].far - pts[j].frr > 0.0) ++j;
  // d(-inf) = 1 and d(+inf) = -1, so the crossing always exists.
  const DetPoint& a = pts[j - 1];
  const DetPoint& b = pts[j];
  const double da = a.far - a.frr;
  const double db = b.far - b.frr;
  if (db == 0.0) {
    r.eer = b.far;
  } else {
    const double alpha = da / (da - db);
    r.eer = a.far + alpha * (b.far - a.far);
  }
  const DetPoint& chosen = std::abs(da) < std::abs(db) ? a : b;
  r.threshold = chosen.threshold;
  r.far_at_threshold = chosen.far;
  r.frr_at_threshold = chosen.frr;
  return r;
}

double f1(const ScoreSet& scores, double t, F1Positive positive) {
  check_population(scores.real_scores, "real");
  check_population(scores.fake_scores, "fake");
  const auto above = [t](std::span<const double> s) {
    return static_cast<double>(std::count_if(s.begin(), s.end(), [t](double v) { return v > t; }));
  };
  const double real_above = above(scores.real_scores);
  const double fake_above = above(scores.fake_scores);
  const double real_below = static_cast<double>(scores.real_scores.size()) - real_above;
  const double fake_below = static_cast<double>(scores.fake_scores.size()) - fake_above;
  double tp = 0.0;
  double fp = 0.0;
  double fn = 0.0;
  if (positive == F1Positive::kReal) {
    tp = real_above;
    fp = fake_above;
    fn = real_below;
  } else {
    tp = fake_below;
    fp = real_below;
    fn = fake_above;
  }
  const double denom = 2.0 * tp + fp + fn;
  return denom > 0.0 ? 2.0 * tp / denom : 0.0;
}

std::string to_string(F1Positive p) { return p == F1Positive::kReal ? "real" : "fake"; }

F1Positive f1_positive_from_string(std::string_view s) {
  if (s == "real") return F1Positive::kReal;
  if (s == "fake") return F1Positive::kFake;
  throw ArgumentError("f1 positive class must be 'real' or 'fake'");
}

namespace {

nlohmann::json encode_real(double v) {
  if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
  return v;
}

double decode_real(const nlohmann::json& j) {
  if (j.is_string()) {
    const auto s = j.get<std::string>();
    if (s == "inf") return kInf;
    if (s == "-inf") return -kInf;
    throw FormatError("bad threshold value '" + s + "'");
  }
  return j.get<double>();
}

}  // namespace

void to_json(nlohmann::json& j, const Threshold& t) {
  j = nlohmann::json{{"value", encode_real(t.value)},
                     {"source", t.source == ThresholdSource::kEerOnClean ? "eer_on_clean" : "manual"}};
}

void from_json(const nlohmann::json& j, Threshold& t) {
  t.value = decode_real(j.at("value"));
  const std::string src = j.value("source", std::string("manual"));
  if (src == "eer_on_clean") {
    t.source = ThresholdSource::kEerOnClean;
  } else if (src == "manual") {
    t.source = ThresholdSource::kManual;
  } else {
    throw FormatError("unknown threshold source '" + src + "'");
  }
}

}  // namespace cladlab
