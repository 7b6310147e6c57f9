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

#include "cladlab/audio.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <cstring>
#include <fstream>
#include <iterator>
#include <string>

#include "cladlab/errors.hpp"

namespace cladlab {
namespace {

constexpr std::uint16_t kPcmFormat = 1;

std::uint32_t read_u32(const unsigned char* p) {
  return static_cast<std::uint32_t>(p[0]) | (static_cast<std::uint32_t>(p[1]) << 8) |
         (static_cast<std::uint32_t>(p[2]) << 16) | (static_cast<std::uint32_t>(p[3]) << 24);
}

std::uint16_t read_u16(const unsigned char* p) {
  return static_cast<std::uint16_t>(p[0] | (p[1] << 8));
}

void put_u32(std::string& out, std::uint32_t v) {
  for (int i = 0; i < 4; ++i) out.push_back(static_cast<char>((v >> (8 * i)) & 0xff));
}

void put_u16(std::string& out, std::uint16_t v) {
  out.push_back(static_cast<char>(v & 0xff));
  out.push_back(static_cast<char>(v >> 8));
}

}  // namespace

void check_waveform(const Waveform& w) {
  if (w.empty()) throw ArgumentError("waveform is empty");
  if (w.sample_rate_hz <= 0) throw ArgumentError("sample_rate_hz must be positive");
  for (double s : w.samples) {
    if (!std::isfinite(s)) throw ArgumentError("waveform contains a non-finite sample");
  }
}

Waveform read_wav(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open " + path.string());
  const std::string bytes((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
  const auto* data = reinterpret_cast<const unsigned char*>(bytes.data());
  const std::size_t size = bytes.size();

  if (size < 12 || std::memcmp(data, "RIFF", 4) != 0) {
    throw FormatError(path.string() + ": missing RIFF chunk id");
  }
  if (std::memcmp(data + 8, "WAVE", 4) != 0) {
    throw FormatError(path.string() + ": RIFF form type is not WAVE");
  }

  bool have_fmt = false;
  int sample_rate = 0;
  const unsigned char* pcm = nullptr;
  std::size_t pcm_bytes = 0;

  std::size_t pos = 12;
  while (pos + 8 <= size) {
    const unsigned char* chunk = data + pos;
    const std::uint32_t chunk_size = read_u32(chunk + 4);
    const std::size_t body = pos + 8;
    if (body + chunk_size > size) {
      // Tolerate a truncated data chunk (common with streamed writers), but
      // not a truncated fmt chunk.
      if (std::memcmp(chunk, "data", 4) != 0) {
        throw FormatError(path.string() + ": chunk size exceeds file length");
      }
    }
    const std::size_t available = std::min<std::size_t>(chunk_size, size - body);
    if (std::memcmp(chunk, "fmt ", 4) == 0) {
      if (chunk_size < 16) throw FormatError(path.string() + ": fmt chunk too short");
      const std::uint16_t format = read_u16(data + body);
      const std::uint16_t channels = read_u16(data + body + 2);
      sample_rate = static_cast<int>(read_u32(data + body + 4));
      const std::uint16_t bits = read_u16(data + body + 14);
      if (format != kPcmFormat) {
        throw FormatError(path.string() + ": format code " + std::to_string(format) +
                          " unsupported (PCM only)");
      }
      if (channels == 2) throw FormatError(path.string() + ": stereo unsupported");
      if (channels != 1) {
        throw FormatError(path.string() + ": channel count " + std::to_string(channels) +
                          " unsupported");
      }
      if (bits != 16) {
        throw FormatError(path.string() + ": bit depth " + std::to_string(bits) +
                          " unsupported");
      }
      if (sample_rate <= 0) throw FormatError(path.string() + ": sample rate is zero");
      have_fmt = true;
    } else if (std::memcmp(chunk, "data", 4) == 0) {
      pcm = data + body;
      pcm_bytes = available;
    }
    pos = body + chunk_size + (chunk_size & 1u);
  }

  if (!have_fmt) throw FormatError(path.string() + ": missing fmt chunk");
  if (pcm == nullptr) throw FormatError(path.string() + ": missing data chunk");

  Waveform w;
  w.sample_rate_hz = sample_rate;
  w.samples.resize(pcm_bytes / 2);
  for (std::size_t i = 0; i < w.samples.size(); ++i) {
    const auto v = static_cast<std::int16_t>(read_u16(pcm + 2 * i));
    w.samples[i] = static_cast<double>(v) / 32768.0;
  }
  return w;
}

std::int16_t quantize_sample(double amplitude) noexcept {
  const double v = std::clamp(std::round(amplitude * 32768.0), -32768.0, 32767.0);
  return static_cast<std::int16_t>(v);
}

void write_wav(const Waveform& w, const std::filesystem::path& path) {
  for (double s : w.samples) {
    if (!std::isfinite(s)) throw ArgumentError("write_wav: non-finite sample");
  }
  if (w.sample_rate_hz <= 0) throw ArgumentError("write_wav: sample_rate_hz must be positive");

  const auto data_bytes = static_cast<std::uint32_t>(w.samples.size() * 2);
  std::string out;
  out.reserve(44 + data_bytes);
  out += "RIFF";
  put_u32(out, 36 + data_bytes);
  out += "WAVE";
  out += "fmt ";
  put_u32(out, 16);
  put_u16(out, kPcmFormat);
  put_u16(out, 1);
  put_u32(out, static_cast<std::uint32_t>(w.sample_rate_hz));
  put_u32(out, static_cast<std::uint32_t>(w.sample_rate_hz) * 2);
  put_u16(out, 2);
  put_u16(out, 16);
  out += "data";
  put_u32(out, data_bytes);
  for (double s : w.samples) put_u16(out, static_cast<std::uint16_t>(quantize_sample(s)));

  std::ofstream f(path, std::ios::binary | std::ios::trunc);
  if (!f) throw IoError("cannot open " + path.string() + " for writing");
  f.write(out.data(), static_cast<std::streamsize>(out.size()));
  if (!f) throw IoError("write failed: " + path.string());
}

Waveform fix_length(const Waveform& w, std::size_t target_len) {
  if (target_len == 0) throw ArgumentError("fix_length: target_len must be positive");
  if (w.empty()) throw ArgumentError("fix_length: empty waveform");
  Waveform out;
  out.sample_rate_hz = w.sample_rate_hz;
  if (w.size() >= target_len) {
    out.samples.assign(w.samples.begin(), w.samples.begin() + static_cast<std::ptrdiff_t>(target_len));
    return out;
  }
  out.samples.reserve(target_len);
  while (out.samples.size() < target_len) {
    const std::size_t take = std::min(w.size(), target_len - out.samples.size());
    out.samples.insert(out.samples.end(), w.samples.begin(),
                       w.samples.begin() + static_cast<std::ptrdiff_t>(take));
  }
  return out;
}

PowerStats measure_power(std::span<const double> samples) {
  if (samples.empty()) throw ArgumentError("measure_power: empty signal");
  PowerStats stats;
  double acc = 0.0;
  for (double s : samples) {
    acc += s * s;
    stats.peak_abs = std::max(stats.peak_abs, std::abs(s));
  }
  stats.mean_square_power = acc / static_cast<double>(samples.size());
  return stats;
}

double snr_db(double signal_power, double noise_power) {
  return 10.0 * std::log10(signal_power / noise_power);
}

}  // namespace cladlab
