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
#include <cmath>
#include <complex>
#include <mutex>
#include <numbers>

#include "cladlab/errors.hpp"
#include "cladlab/manipulations.hpp"
#include "fft.hpp"

namespace cladlab {
namespace detail {
namespace {
std::mutex& planner_mutex() {
  static std::mutex m;
  return m;
}
}  // namespace

RealFft::RealFft(std::size_t n) : n_(n) {
  std::lock_guard lock(planner_mutex());
  real_ = fftw_alloc_real(n);
  spec_ = fftw_alloc_complex(n / 2 + 1);
  fwd_ = fftw_plan_dft_r2c_1d(static_cast<int>(n), real_, spec_, FFTW_ESTIMATE);
  inv_ = fftw_plan_dft_c2r_1d(static_cast<int>(n), spec_, real_, FFTW_ESTIMATE);
}

RealFft::~RealFft() {
  std::lock_guard lock(planner_mutex());
  fftw_destroy_plan(fwd_);
  fftw_destroy_plan(inv_);
  fftw_free(real_);
  fftw_free(spec_);
}

void RealFft::forward(std::span<const double> in, std::span<std::complex<double>> out) {
  std::copy(in.begin(), in.end(), real_);
  fftw_execute(fwd_);
  for (std::size_t b = 0; b < bins(); ++b) out[b] = {spec_[b][0], spec_[b][1]};
}

void RealFft::inverse(std::span<const std::complex<double>> in, std::span<double> out) {
  for (std::size_t b = 0; b < bins(); ++b) {
    spec_[b][0] = in[b].real();
    spec_[b][1] = in[b].imag();
  }
  fftw_execute(inv_);
  std::copy(real_, real_ + n_, out.begin());
}

}  // namespace detail

namespace {

std::vector<double> periodic_hann(std::size_t n) {
  std::vector<double> w(n);
  for (std::size_t i = 0; i < n; ++i) {
    w[i] = 0.5 - 0.5 * std::cos(2.0 * std::numbers::pi * static_cast<double>(i) / static_cast<double>(n));
  }
  return w;
}

double wrap_phase(double p) {
  return p - 2.0 * std::numbers::pi * std::round(p / (2.0 * std::numbers::pi));
}

}  // namespace

Waveform time_stretch(const Waveform& w, double factor, int n_fft) {
  if (!(factor > 0.0) || !std::isfinite(factor)) {
    throw ArgumentError("time_stretch: factor must be positive");
  }
  if (n_fft <= 0 || n_fft % 2 != 0) {
    throw ArgumentError("time_stretch: n_fft must be a positive even integer");
  }
  const auto n = static_cast<std::size_t>(n_fft);
  const std::size_t len = w.size();
  if (len < n) throw ArgumentError("time_stretch: input shorter than n_fft");

  const std::size_t hop = n / 2;
  const std::size_t pad = n / 2;
  const std::size_t n_freq = n / 2 + 1;
  const std::vector<double> window = periodic_hann(n);

  // Centered STFT with reflect padding.
  std::vector<double> padded(len + 2 * pad);
  for (std::size_t j = 0; j < padded.size(); ++j) {
    auto idx = static_cast<std::ptrdiff_t>(j) - static_cast<std::ptrdiff_t>(pad);
    const auto last = static_cast<std::ptrdiff_t>(len) - 1;
    if (idx < 0) idx = -idx;
    if (idx > last) idx = 2 * last - idx;
    padded[j] = w.samples[static_cast<std::size_t>(idx)];
  }
  const std::size_t n_frames = 1 + len / hop;

  detail::RealFft fft(n);
  std::vector<std::complex<double>> stft(n_frames * n_freq);
  std::vector<double> frame(n);
  for (std::size_t f = 0; f < n_frames; ++f) {
    for (std::size_t i = 0; i < n; ++i) frame[i] = padded[f * hop + i] * window[i];
    fft.forward(frame, std::span(stft).subspan(f * n_freq, n_freq));
  }
  auto bin_at = [&](std::size_t f, std::size_t b) -> std::complex<double> {
    return f < n_frames ? stft[f * n_freq + b] : std::complex<double>{};
  };

  // Phase vocoder at rate 1/factor.
  const double rate = 1.0 / factor;
  std::vector<double> phase_advance(n_freq);
  for (std::size_t b = 0; b < n_freq; ++b) {
    phase_advance[b] = std::numbers::pi * static_cast<double>(hop) * static_cast<double>(b) /
                       static_cast<double>(n_freq - 1);
  }
  std::vector<double> phase_acc(n_freq);
  for (std::size_t b = 0; b < n_freq; ++b) phase_acc[b] = std::arg(bin_at(0, b));

  // Identity phase locking: only spectral peaks follow the recurrence; every
  // other bin keeps its analysis-frame phase offset to the peak that owns it.
  // Without it, frame pairs revisited at rate < 1 add per-bin phase errors
  // that never cancel and smear stationary partials.
  const auto n_steps = static_cast<std::size_t>(std::ceil(static_cast<double>(n_frames) / rate));
  std::vector<std::complex<double>> stretched(n_steps * n_freq);
  std::vector<double> mag(n_freq);
  std::vector<double> out_phase(n_freq);
  std::vector<std::size_t> peaks;
  for (std::size_t s = 0; s < n_steps; ++s) {
    const double t = static_cast<double>(s) * rate;
    const auto i0 = static_cast<std::size_t>(std::floor(t));
    const double alpha = t - static_cast<double>(i0);
    const std::size_t ref = alpha < 0.5 ? i0 : i0 + 1;
    for (std::size_t b = 0; b < n_freq; ++b) {
      mag[b] = alpha * std::abs(bin_at(i0 + 1, b)) + (1.0 - alpha) * std::abs(bin_at(i0, b));
    }
    peaks.clear();
    for (std::size_t b = 0; b < n_freq; ++b) {
      const bool above_left = b == 0 || mag[b] > mag[b - 1];
      const bool above_right = b + 1 == n_freq || mag[b] >= mag[b + 1];
      if (mag[b] > 0.0 && above_left && above_right) peaks.push_back(b);
    }
    if (peaks.empty()) {
      out_phase = phase_acc;
    } else {
      std::size_t begin = 0;
      for (std::size_t k = 0; k < peaks.size(); ++k) {
        const std::size_t p = peaks[k];
        std::size_t end = n_freq;  // one past the last bin owned by p
        if (k + 1 < peaks.size()) {
          end = p;
          for (std::size_t b = p; b <= peaks[k + 1]; ++b) {
            if (mag[b] < mag[end]) end = b;
          }
          ++end;
        }
        const double ref_peak = std::arg(bin_at(ref, p));
        for (std::size_t b = begin; b < end; ++b) {
          out_phase[b] = phase_acc[p] + std::arg(bin_at(ref, b)) - ref_peak;
        }
        begin = end;
      }
    }
    for (std::size_t b = 0; b < n_freq; ++b) {
      stretched[s * n_freq + b] = std::polar(mag[b], out_phase[b]);
      const double dphase =
          wrap_phase(std::arg(bin_at(i0 + 1, b)) - std::arg(bin_at(i0, b)) - phase_advance[b]);
      phase_acc[b] = out_phase[b] + dphase + phase_advance[b];
    }
  }

  // Inverse STFT with squared-window normalization.
  const std::size_t out_len =
      static_cast<std::size_t>(std::llround(static_cast<double>(len) * factor));
  const std::size_t buf_len = (n_steps - 1) * hop + n;
  std::vector<double> buf(buf_len, 0.0);
  std::vector<double> env(buf_len, 0.0);
  const double scale = 1.0 / static_cast<double>(n);
  for (std::size_t s = 0; s < n_steps; ++s) {
    fft.inverse(std::span(stretched).subspan(s * n_freq, n_freq), frame);
    for (std::size_t i = 0; i < n; ++i) {
      buf[s * hop + i] += frame[i] * scale * window[i];
      env[s * hop + i] += window[i] * window[i];
    }
  }
  Waveform out;
  out.sample_rate_hz = w.sample_rate_hz;
  out.samples.assign(out_len, 0.0);
  for (std::size_t i = 0; i < out_len; ++i) {
    const std::size_t j = i + pad;
    if (j < buf_len && env[j] > 1e-11) out.samples[i] = buf[j] / env[j];
  }
  return out;
}

}  // namespace cladlab
