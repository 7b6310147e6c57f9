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

#include "cladlab/plots.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <iomanip>

#include "cladlab/errors.hpp"

namespace cladlab {
namespace {

constexpr double kWidth = 480.0;
constexpr double kHeight = 360.0;
constexpr double kMargin = 48.0;
constexpr const char* kPalette[] = {"#1f77b4", "#d62728", "#2ca02c", "#9467bd", "#ff7f0e", "#8c564b"};

std::ofstream open_out(const std::filesystem::path& file) {
  std::ofstream out(file, std::ios::binary);
  if (!out) throw IoError("cannot open '" + file.string() + "' for writing");
  out << std::fixed << std::setprecision(2);
  return out;
}

double px(double v) { return kMargin + v * (kWidth - 2 * kMargin); }
double py(double v) { return kHeight - kMargin - v * (kHeight - 2 * kMargin); }

void frame(std::ofstream& out, const char* xlabel, const char* ylabel) {
  out << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << kWidth << "\" height=\"" << kHeight
      << "\" font-family=\"sans-serif\" font-size=\"11\">\n";
  out << "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n";
  out << "<rect x=\"" << kMargin << "\" y=\"" << kMargin << "\" width=\"" << kWidth - 2 * kMargin
      << "\" height=\"" << kHeight - 2 * kMargin << "\" fill=\"none\" stroke=\"black\"/>\n";
  for (int k = 0; k <= 4; ++k) {
    const double v = k / 4.0;
    out << "<text x=\"" << px(v) << "\" y=\"" << kHeight - kMargin + 14 << "\" text-anchor=\"middle\">"
        << v << "</text>\n";
    out << "<text x=\"" << kMargin - 6 << "\" y=\"" << py(v) + 4 << "\" text-anchor=\"end\">" << v
        << "</text>\n";
  }
  out << "<text x=\"" << kWidth / 2 << "\" y=\"" << kHeight - 10 << "\" text-anchor=\"middle\">"
      << xlabel << "</text>\n";
  out << "<text x=\"14\" y=\"" << kHeight / 2 << "\" text-anchor=\"middle\" transform=\"rotate(-90 14 "
      << kHeight / 2 << ")\">" << ylabel << "</text>\n";
}

std::string escape(const std::string& s) {
  std::string out;
  for (char c : s) {
    switch (c) {
      case '<': out += "&lt;"; break;
      case '>': out += "&gt;"; break;
      case '&': out += "&amp;"; break;
      case '"': out += "&quot;"; break;
      default: out += c;
    }
  }
  return out;
}

}  // namespace

void write_det_svg(std::span<const DetCurve> curves, const std::filesystem::path& file) {
  std::ofstream out = open_out(file);
  frame(out, "FAR", "FRR");
  for (std::size_t c = 0; c < curves.size(); ++c) {
    const char* color = kPalette[c % std::size(kPalette)];
    out << "<polyline fill=\"none\" stroke=\"" << color << "\" points=\"";
    for (const DetPoint& p : curves[c].points) out << px(p.far) << ',' << py(p.frr) << ' ';
    out << "\"/>\n";
    out << "<text x=\"" << kWidth - kMargin - 4 << "\" y=\"" << kMargin + 14 + 14 * static_cast<double>(c)
        << "\" text-anchor=\"end\" fill=\"" << color << "\">" << escape(curves[c].label) << "</text>\n";
  }
  out << "</svg>\n";
  if (!out) throw IoError("failed writing '" + file.string() + "'");
}

Histogram score_histogram(const ScoreSet& scores, std::size_t bins) {
  if (bins == 0) throw ArgumentError("histogram needs at least one bin");
  Histogram h;
  h.real_counts.assign(bins, 0);
  h.fake_counts.assign(bins, 0);
  const auto bin_of = [&](double s) {
    const double x = std::clamp(s, 0.0, 1.0) * static_cast<double>(bins);
    return std::min(bins - 1, static_cast<std::size_t>(x));
  };
  for (double s : scores.real_scores) ++h.real_counts[bin_of(s)];
  for (double s : scores.fake_scores) ++h.fake_counts[bin_of(s)];
  return h;
}

void write_histogram_csv(const Histogram& h, const std::filesystem::path& file) {
  std::ofstream out(file, std::ios::binary);
  if (!out) throw IoError("cannot open '" + file.string() + "' for writing");
  out << std::setprecision(17) << "bin_lo,bin_hi,real,fake\n";
  const std::size_t bins = h.real_counts.size();
  const double width = (h.hi - h.lo) / static_cast<double>(bins);
  for (std::size_t b = 0; b < bins; ++b) {
    out << h.lo + width * static_cast<double>(b) << ',' << h.lo + width * static_cast<double>(b + 1) << ','
        << h.real_counts[b] << ',' << h.fake_counts[b] << '\n';
  }
  if (!out) throw IoError("failed writing '" + file.string() + "'");
}

void write_histogram_svg(const Histogram& h, const std::filesystem::path& file) {
  std::ofstream out = open_out(file);
  frame(out, "score (probability of real)", "fraction of class");
  const std::size_t bins = h.real_counts.size();
  std::size_t n_real = 0;
  std::size_t n_fake = 0;
  for (std::size_t b = 0; b < bins; ++b) {
    n_real += h.real_counts[b];
    n_fake += h.fake_counts[b];
  }
  const double w = 1.0 / static_cast<double>(bins);
  const auto bars = [&](const std::vector<std::size_t>& counts, std::size_t total, const char* color) {
    if (total == 0) return;
    for (std::size_t b = 0; b < bins; ++b) {
      const double frac = static_cast<double>(counts[b]) / static_cast<double>(total);
      if (frac == 0.0) continue;
      out << "<rect x=\"" << px(w * static_cast<double>(b)) << "\" y=\"" << py(frac) << "\" width=\""
          << px(w) - px(0) << "\" height=\"" << py(0) - py(frac) << "\" fill=\"" << color
          << "\" fill-opacity=\"0.5\"/>\n";
    }
  };
  bars(h.real_counts, n_real, kPalette[0]);
  bars(h.fake_counts, n_fake, kPalette[1]);
  out << "<text x=\"" << kMargin + 6 << "\" y=\"" << kMargin + 14 << "\" fill=\"" << kPalette[0]
      << "\">real</text>\n";
  out << "<text x=\"" << kMargin + 6 << "\" y=\"" << kMargin + 28 << "\" fill=\"" << kPalette[1]
      << "\">fake</text>\n";
  out << "</svg>\n";
  if (!out) throw IoError("failed writing '" + file.string() + "'");
}

}  // namespace cladlab
