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

#include "cladlab/encoder.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include <nlohmann/json.hpp>

#include "cladlab/errors.hpp"

namespace cladlab {

double FeatureVector::norm() const {
  double acc = 0.0;
  for (double v : values) acc += v * v;
  return std::sqrt(acc);
}

void Encoder::zero_grad() {
  for (const nn::ParameterRef& p : parameters()) std::fill(p.grads.begin(), p.grads.end(), 0.0f);
}

void TinyEncoderConfig::validate() const {
  if (input_len == 0) throw ArgumentError("encoder: input_len must be positive");
  if (channels.empty()) throw ArgumentError("encoder: at least one block is required");
  if (kernel == 0 || stride == 0) throw ArgumentError("encoder: kernel and stride must be positive");
  if (feature_dim < 2) throw ArgumentError("encoder: feature_dim must be >= 2");
  std::size_t len = input_len;
  for (std::size_t c : channels) {
    if (c == 0) throw ArgumentError("encoder: channel counts must be positive");
    if (len < kernel) throw ArgumentError("encoder: input_len too short for the conv stack");
    len = (len - kernel) / stride + 1;
  }
}

void to_json(nlohmann::json& j, const TinyEncoderConfig& c) {
  j = {{"input_len", c.input_len},
       {"channels", c.channels},
       {"kernel", c.kernel},
       {"stride", c.stride},
       {"feature_dim", c.feature_dim}};
}

void from_json(const nlohmann::json& j, TinyEncoderConfig& c) {
  c = TinyEncoderConfig{};
  c.input_len = j.value("input_len", c.input_len);
  if (j.contains("channels")) c.channels = j.at("channels").get<std::vector<std::size_t>>();
  c.kernel = j.value("kernel", c.kernel);
  c.stride = j.value("stride", c.stride);
  c.feature_dim = j.value("feature_dim", c.feature_dim);
  c.validate();
}

std::vector<float> stack_batch(std::span<const Waveform> batch, std::size_t input_len) {
  std::vector<float> x(batch.size() * input_len);
  for (std::size_t n = 0; n < batch.size(); ++n) {
    if (batch[n].size() != input_len) {
      throw ArgumentError("encoder: waveform " + std::to_string(n) + " has " +
                          std::to_string(batch[n].size()) + " samples, expected " +
                          std::to_string(input_len));
    }
    std::transform(batch[n].samples.begin(), batch[n].samples.end(), x.begin() + static_cast<std::ptrdiff_t>(n * input_len),
                   [](double v) { return static_cast<float>(v); });
  }
  return x;
}

TinyEncoder::TinyEncoder(TinyEncoderConfig config, std::uint64_t seed) : config_(std::move(config)) {
  config_.validate();
  Rng rng(seed);
  std::size_t in_ch = 1;
  for (std::size_t out_ch : config_.channels) {
    Block b{nn::Conv1d(in_ch, out_ch, config_.kernel, config_.stride), nn::BatchNorm1d(out_ch)};
    nn::init_uniform(b.conv.weight, in_ch * config_.kernel, rng);
    nn::init_uniform(b.conv.bias, in_ch * config_.kernel, rng);
    blocks_.push_back(std::move(b));
    in_ch = out_ch;
  }
  proj_ = nn::Linear(in_ch, config_.feature_dim);
  nn::init_uniform(proj_.weight, in_ch, rng);
  nn::init_uniform(proj_.bias, in_ch, rng);
}

FeatureMatrix TinyEncoder::forward(std::span<const Waveform> batch, ForwardMode mode) {
  const std::size_t n = batch.size();
  FeatureMatrix out(static_cast<Eigen::Index>(n), static_cast<Eigen::Index>(config_.feature_dim));
  if (n == 0) return out;

  const bool cache = mode == ForwardMode::kTraining;
  const nn::BatchNormMode bn_mode = mode == ForwardMode::kInference   ? nn::BatchNormMode::kInference
                                    : mode == ForwardMode::kTraining ? nn::BatchNormMode::kTraining
                                                                     : nn::BatchNormMode::kBatchStatistics;
  if (cache) {
    cache_ = Cache{};
    cache_.batch = n;
  }

  std::vector<float> act = stack_batch(batch, config_.input_len);
  std::size_t len = config_.input_len;
  std::vector<float> x_hat;
  std::vector<float> inv_std;
  for (Block& b : blocks_) {
    std::vector<float> z;
    b.conv.forward(act, n, len, z);
    const std::size_t out_len = b.conv.out_len(len);
    b.bn.forward(z, n, out_len, bn_mode, cache ? &x_hat : nullptr, cache ? &inv_std : nullptr);
    for (float& v : z) v = std::max(v, 0.0f);
    if (cache) {
      cache_.inputs.push_back(std::move(act));
      cache_.lengths.push_back(len);
      cache_.x_hat.push_back(std::move(x_hat));
      cache_.inv_std.push_back(std::move(inv_std));
      cache_.outputs.push_back(z);
    }
    act = std::move(z);
    len = out_len;
  }

  const std::size_t channels = blocks_.back().conv.out_channels();
  std::vector<float> pooled(n * channels);
  for (std::size_t i = 0; i < n * channels; ++i) {
    double acc = 0.0;
    const float* p = act.data() + i * len;
    for (std::size_t t = 0; t < len; ++t) acc += p[t];
    pooled[i] = static_cast<float>(acc / static_cast<double>(len));
  }
  std::vector<float> features;
  proj_.forward(pooled, n, features);
  if (cache) cache_.pooled = std::move(pooled);

  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t d = 0; d < config_.feature_dim; ++d) {
      out(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(d)) = features[i * config_.feature_dim + d];
    }
  }
  return out;
}

void TinyEncoder::backward(const FeatureMatrix& grad_features) {
  const std::size_t n = cache_.batch;
  if (n == 0 || cache_.outputs.empty()) {
    throw ConsistencyError("encoder: backward() without a cached training forward");
  }
  if (static_cast<std::size_t>(grad_features.rows()) != n ||
      static_cast<std::size_t>(grad_features.cols()) != config_.feature_dim) {
    throw ArgumentError("encoder: gradient shape does not match the cached batch");
  }
  std::vector<float> dfeat(n * config_.feature_dim);
  for (std::size_t i = 0; i < dfeat.size(); ++i) dfeat[i] = static_cast<float>(grad_features.data()[i]);

  std::vector<float> dpooled;
  proj_.backward(cache_.pooled, dfeat, n, &dpooled);

  const std::size_t channels = blocks_.back().conv.out_channels();
  const std::size_t last_len = blocks_.back().conv.out_len(cache_.lengths.back());
  std::vector<float> dact(n * channels * last_len);
  for (std::size_t i = 0; i < n * channels; ++i) {
    const float g = dpooled[i] / static_cast<float>(last_len);
    std::fill_n(dact.begin() + static_cast<std::ptrdiff_t>(i * last_len), last_len, g);
  }

  for (std::size_t bi = blocks_.size(); bi-- > 0;) {
    Block& b = blocks_[bi];
    const std::vector<float>& out = cache_.outputs[bi];
    for (std::size_t i = 0; i < dact.size(); ++i) {
      if (out[i] <= 0.0f) dact[i] = 0.0f;
    }
    const std::size_t in_len = cache_.lengths[bi];
    b.bn.backward(dact, cache_.x_hat[bi], cache_.inv_std[bi], n, b.conv.out_len(in_len));
    std::vector<float> dx;
    b.conv.backward(cache_.inputs[bi], dact, n, in_len, bi > 0 ? &dx : nullptr);
    dact = std::move(dx);
  }
}

std::vector<nn::ParameterRef> TinyEncoder::parameters() {
  std::vector<nn::ParameterRef> out;
  auto add = [&out](std::string name, nn::Tensor& t) {
    out.push_back({std::move(name), t.values, t.grads});
  };
  for (std::size_t i = 0; i < blocks_.size(); ++i) {
    const std::string prefix = "blocks." + std::to_string(i) + ".";
    add(prefix + "conv.weight", blocks_[i].conv.weight);
    add(prefix + "conv.bias", blocks_[i].conv.bias);
    add(prefix + "bn.weight", blocks_[i].bn.gamma);
    add(prefix + "bn.bias", blocks_[i].bn.beta);
  }
  add("proj.weight", proj_.weight);
  add("proj.bias", proj_.bias);
  return out;
}

std::vector<nn::ParameterRef> TinyEncoder::buffers() {
  std::vector<nn::ParameterRef> out;
  for (std::size_t i = 0; i < blocks_.size(); ++i) {
    const std::string prefix = "blocks." + std::to_string(i) + ".bn.";
    out.push_back({prefix + "running_mean", blocks_[i].bn.running_mean, {}});
    out.push_back({prefix + "running_var", blocks_[i].bn.running_var, {}});
  }
  return out;
}

std::unique_ptr<Encoder> TinyEncoder::clone() const {
  auto copy = std::make_unique<TinyEncoder>(*this);
  copy->cache_ = Cache{};
  return copy;
}

EncoderPair clone_into_key(std::unique_ptr<Encoder> query, double momentum) {
  if (!query) throw ArgumentError("clone_into_key: query encoder is null");
  if (!(momentum >= 0.0 && momentum <= 1.0)) throw ArgumentError("clone_into_key: momentum must lie in [0, 1]");
  EncoderPair pair;
  pair.key = query->clone();
  pair.query = std::move(query);
  pair.momentum = momentum;
  return pair;
}

namespace {

void blend(const std::vector<nn::ParameterRef>& key, const std::vector<nn::ParameterRef>& query,
           double mu) {
  if (key.size() != query.size()) throw ConsistencyError("momentum_update: tensor count mismatch");
  for (std::size_t i = 0; i < key.size(); ++i) {
    if (key[i].name != query[i].name || key[i].values.size() != query[i].values.size()) {
      throw ConsistencyError("momentum_update: shape mismatch at " + key[i].name);
    }
    std::span<float> k = key[i].values;
    std::span<const float> q = query[i].values;
    for (std::size_t e = 0; e < k.size(); ++e) {
      k[e] = static_cast<float>(mu * k[e] + (1.0 - mu) * q[e]);
    }
  }
}

}  // namespace

void momentum_update(Encoder& key, Encoder& query, double momentum) {
  blend(key.parameters(), query.parameters(), momentum);
  blend(key.buffers(), query.buffers(), momentum);
}

void momentum_update(EncoderPair& pair) {
  if (!pair.query || !pair.key) throw ConsistencyError("momentum_update: incomplete encoder pair");
  momentum_update(*pair.key, *pair.query, pair.momentum);
}

std::vector<FeatureVector> encode_batch(Encoder& enc, std::span<const Waveform> batch) {
  std::vector<FeatureVector> out;
  if (batch.empty()) return out;
  const FeatureMatrix f = enc.forward(batch, ForwardMode::kInference);
  out.reserve(batch.size());
  for (Eigen::Index i = 0; i < f.rows(); ++i) {
    FeatureVector v;
    v.values.assign(f.row(i).data(), f.row(i).data() + f.cols());
    out.push_back(std::move(v));
  }
  return out;
}

}  // namespace cladlab
