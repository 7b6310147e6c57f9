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

// Microbenchmarks for the hot paths of training and evaluation.

#include <cstdint>
#include <random>
#include <vector>

#include <benchmark/benchmark.h>

#include "cladlab/audio.hpp"
#include "cladlab/contrastive.hpp"
#include "cladlab/encoder.hpp"
#include "cladlab/losses.hpp"
#include "cladlab/manipulations.hpp"

namespace cladlab {
namespace {

Waveform noise_clip(std::size_t len, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> g(0.0, 0.2);
  Waveform w;
  w.samples.resize(len);
  for (double& x : w.samples) x = g(rng);
  return w;
}

FeatureMatrix random_features(Eigen::Index rows, Eigen::Index cols, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> g;
  FeatureMatrix m(rows, cols);
  for (Eigen::Index i = 0; i < m.size(); ++i) m.data()[i] = g(rng);
  return m;
}

void BM_EncoderInference(benchmark::State& state) {
  TinyEncoderConfig cfg;
  TinyEncoder enc(cfg, 1);
  std::vector<Waveform> batch;
  for (int i = 0; i < state.range(0); ++i) batch.push_back(noise_clip(cfg.input_len, i));
  for (auto _ : state) benchmark::DoNotOptimize(enc.forward(batch, ForwardMode::kInference));
  state.SetItemsProcessed(state.iterations() * state.range(0));
}
BENCHMARK(BM_EncoderInference)->Arg(1)->Arg(16)->Arg(64);

void BM_EncoderTrainingStep(benchmark::State& state) {
  TinyEncoderConfig cfg;
  TinyEncoder enc(cfg, 1);
  std::vector<Waveform> batch;
  for (int i = 0; i < 24; ++i) batch.push_back(noise_clip(cfg.input_len, i));
  const FeatureMatrix upstream = random_features(24, static_cast<Eigen::Index>(cfg.feature_dim), 3);
  for (auto _ : state) {
    enc.zero_grad();
    benchmark::DoNotOptimize(enc.forward(batch, ForwardMode::kTraining));
    enc.backward(upstream);
  }
}
BENCHMARK(BM_EncoderTrainingStep);

void BM_ContrastiveLoss(benchmark::State& state) {
  const auto k = static_cast<std::size_t>(state.range(0));
  const NegativeQueue queue(k, 32, 7);
  const FeatureMatrix q = random_features(24, 32, 1);
  const FeatureMatrix kp = random_features(24, 32, 2);
  for (auto _ : state) benchmark::DoNotOptimize(contrastive_loss(q, kp, queue, 0.07));
}
BENCHMARK(BM_ContrastiveLoss)->Arg(1024)->Arg(6144);

void BM_TimeStretch(benchmark::State& state) {
  const Waveform w = noise_clip(16000, 4);
  for (auto _ : state) benchmark::DoNotOptimize(time_stretch(w, 1.1, 128));
}
BENCHMARK(BM_TimeStretch);

void BM_Resample(benchmark::State& state) {
  const Waveform w = noise_clip(16000, 5);
  for (auto _ : state) benchmark::DoNotOptimize(resample(w, static_cast<int>(state.range(0))));
}
BENCHMARK(BM_Resample)->Arg(15000)->Arg(17000);

void BM_WhiteNoise(benchmark::State& state) {
  const Waveform w = noise_clip(16000, 6);
  const NoiseBank bank = NoiseBank::synthetic(0);
  std::uint64_t seed = 0;
  for (auto _ : state) benchmark::DoNotOptimize(apply(WhiteNoiseParams{15.0}, w, bank, ++seed));
}
BENCHMARK(BM_WhiteNoise);

}  // namespace
}  // namespace cladlab

BENCHMARK_MAIN();
