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
#include <numeric>

#include <Eigen/Core>

#include "cladlab/errors.hpp"
#include "cladlab/nn.hpp"

namespace cladlab::nn {
namespace {

using RowMatrix = Eigen::Matrix<float, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
using MatMap = Eigen::Map<RowMatrix>;
using ConstMatMap = Eigen::Map<const RowMatrix>;
using VecMap = Eigen::Map<Eigen::VectorXf>;
using ConstVecMap = Eigen::Map<const Eigen::VectorXf>;

std::size_t product(const std::vector<std::size_t>& dims) {
  return std::accumulate(dims.begin(), dims.end(), std::size_t{1}, std::multiplies<>());
}

}  // namespace

Tensor::Tensor(std::vector<std::size_t> dims)
    : shape(std::move(dims)), values(product(shape), 0.0f), grads(product(shape), 0.0f) {}

void init_uniform(Tensor& t, std::size_t fan_in, Rng& rng) {
  const double bound = 1.0 / std::sqrt(static_cast<double>(fan_in));
  std::uniform_real_distribution<double> dist(-bound, bound);
  for (float& v : t.values) v = static_cast<float>(dist(rng));
}

// --- Conv1d ------------------------------------------------------------------

Conv1d::Conv1d(std::size_t in_channels, std::size_t out_channels, std::size_t kernel,
               std::size_t stride)
    : weight({out_channels, in_channels, kernel}),
      bias({out_channels}),
      in_channels_(in_channels),
      out_channels_(out_channels),
      kernel_(kernel),
      stride_(stride) {}

std::size_t Conv1d::out_len(std::size_t in_len) const {
  if (in_len < kernel_) return 0;
  return (in_len - kernel_) / stride_ + 1;
}

void Conv1d::forward(std::span<const float> x, std::size_t batch, std::size_t in_len,
                     std::vector<float>& y) const {
  const std::size_t t_out = out_len(in_len);
  const std::size_t rows = in_channels_ * kernel_;
  y.assign(batch * out_channels_ * t_out, 0.0f);
  RowMatrix cols(rows, t_out);
  const ConstMatMap w(weight.values.data(), out_channels_, rows);
  const ConstVecMap b(bias.values.data(), out_channels_);
  for (std::size_t n = 0; n < batch; ++n) {
    const float* xn = x.data() + n * in_channels_ * in_len;
    for (std::size_t ci = 0; ci < in_channels_; ++ci) {
      for (std::size_t j = 0; j < kernel_; ++j) {
        float* row = cols.data() + (ci * kernel_ + j) * t_out;
        const float* src = xn + ci * in_len + j;
        for (std::size_t t = 0; t < t_out; ++t) row[t] = src[t * stride_];
      }
    }
    MatMap yn(y.data() + n * out_channels_ * t_out, out_channels_, t_out);
    yn.noalias() = w * cols;
    yn.colwise() += b;
  }
}

void Conv1d::backward(std::span<const float> x, std::span<const float> dy, std::size_t batch,
                      std::size_t in_len, std::vector<float>* dx) {
  const std::size_t t_out = out_len(in_len);
  const std::size_t rows = in_channels_ * kernel_;
  RowMatrix cols(rows, t_out);
  RowMatrix dcols(rows, t_out);
  const ConstMatMap w(weight.values.data(), out_channels_, rows);
  MatMap dw(weight.grads.data(), out_channels_, rows);
  VecMap db(bias.grads.data(), out_channels_);
  if (dx != nullptr) dx->assign(batch * in_channels_ * in_len, 0.0f);
  for (std::size_t n = 0; n < batch; ++n) {
    const float* xn = x.data() + n * in_channels_ * in_len;
    for (std::size_t ci = 0; ci < in_channels_; ++ci) {
      for (std::size_t j = 0; j < kernel_; ++j) {
        float* row = cols.data() + (ci * kernel_ + j) * t_out;
        const float* src = xn + ci * in_len + j;
        for (std::size_t t = 0; t < t_out; ++t) row[t] = src[t * stride_];
      }
    }
    const ConstMatMap dyn(dy.data() + n * out_channels_ * t_out, out_channels_, t_out);
    dw.noalias() += dyn * cols.transpose();
    db += dyn.rowwise().sum();
    if (dx != nullptr) {
      dcols.noalias() = w.transpose() * dyn;
      float* dxn = dx->data() + n * in_channels_ * in_len;
      for (std::size_t ci = 0; ci < in_channels_; ++ci) {
        for (std::size_t j = 0; j < kernel_; ++j) {
          const float* row = dcols.data() + (ci * kernel_ + j) * t_out;
          float* dst = dxn + ci * in_len + j;
          for (std::size_t t = 0; t < t_out; ++t) dst[t * stride_] += row[t];
        }
      }
    }
  }
}

// --- BatchNorm1d -------------------------------------------------------------

BatchNorm1d::BatchNorm1d(std::size_t channels, float momentum, float eps)
    : gamma({channels}),
      beta({channels}),
      running_mean(channels, 0.0f),
      running_var(channels, 1.0f),
      channels_(channels),
      momentum_(momentum),
      eps_(eps) {
  std::fill(gamma.values.begin(), gamma.values.end(), 1.0f);
}

void BatchNorm1d::forward(std::span<float> x, std::size_t batch, std::size_t len,
                          BatchNormMode mode, std::vector<float>* x_hat,
                          std::vector<float>* inv_std) {
  const std::size_t per_channel = batch * len;
  if (x_hat != nullptr) x_hat->resize(x.size());
  if (inv_std != nullptr) inv_std->resize(channels_);
  for (std::size_t c = 0; c < channels_; ++c) {
    double mean = 0.0;
    double var = 0.0;
    if (mode == BatchNormMode::kInference) {
      mean = running_mean[c];
      var = running_var[c];
    } else {
      double acc = 0.0;
      for (std::size_t n = 0; n < batch; ++n) {
        const float* p = x.data() + (n * channels_ + c) * len;
        for (std::size_t t = 0; t < len; ++t) acc += p[t];
      }
      mean = acc / static_cast<double>(per_channel);
      double sq = 0.0;
      for (std::size_t n = 0; n < batch; ++n) {
        const float* p = x.data() + (n * channels_ + c) * len;
        for (std::size_t t = 0; t < len; ++t) {
          const double d = p[t] - mean;
          sq += d * d;
        }
      }
      var = sq / static_cast<double>(per_channel);
      if (mode == BatchNormMode::kTraining) {
        const double unbiased =
            per_channel > 1 ? var * static_cast<double>(per_channel) / static_cast<double>(per_channel - 1)
                            : var;
        running_mean[c] = static_cast<float>((1.0 - momentum_) * running_mean[c] + momentum_ * mean);
        running_var[c] = static_cast<float>((1.0 - momentum_) * running_var[c] + momentum_ * unbiased);
      }
    }
    const auto istd = static_cast<float>(1.0 / std::sqrt(var + eps_));
    const auto m = static_cast<float>(mean);
    const float g = gamma.values[c];
    const float b = beta.values[c];
    if (inv_std != nullptr) (*inv_std)[c] = istd;
    for (std::size_t n = 0; n < batch; ++n) {
      const std::size_t off = (n * channels_ + c) * len;
      float* p = x.data() + off;
      float* xh = x_hat != nullptr ? x_hat->data() + off : nullptr;
      for (std::size_t t = 0; t < len; ++t) {
        const float h = (p[t] - m) * istd;
        if (xh != nullptr) xh[t] = h;
        p[t] = g * h + b;
      }
    }
  }
}

void BatchNorm1d::backward(std::span<float> dy, std::span<const float> x_hat,
                           std::span<const float> inv_std, std::size_t batch, std::size_t len) {
  const auto count = static_cast<double>(batch * len);
  for (std::size_t c = 0; c < channels_; ++c) {
    double sum_dy = 0.0;
    double sum_dy_xhat = 0.0;
    for (std::size_t n = 0; n < batch; ++n) {
      const std::size_t off = (n * channels_ + c) * len;
      for (std::size_t t = 0; t < len; ++t) {
        sum_dy += dy[off + t];
        sum_dy_xhat += static_cast<double>(dy[off + t]) * x_hat[off + t];
      }
    }
    gamma.grads[c] += static_cast<float>(sum_dy_xhat);
    beta.grads[c] += static_cast<float>(sum_dy);
    const double scale = gamma.values[c] * inv_std[c] / count;
    const double mean_dy = sum_dy;
    const double mean_dy_xhat = sum_dy_xhat;
    for (std::size_t n = 0; n < batch; ++n) {
      const std::size_t off = (n * channels_ + c) * len;
      for (std::size_t t = 0; t < len; ++t) {
        dy[off + t] = static_cast<float>(
            scale * (count * dy[off + t] - mean_dy - x_hat[off + t] * mean_dy_xhat));
      }
    }
  }
}

// --- Linear ------------------------------------------------------------------

Linear::Linear(std::size_t in_features, std::size_t out_features)
    : weight({out_features, in_features}), bias({out_features}), in_(in_features), out_(out_features) {}

void Linear::forward(std::span<const float> x, std::size_t batch, std::vector<float>& y) const {
  y.assign(batch * out_, 0.0f);
  const ConstMatMap xm(x.data(), batch, in_);
  const ConstMatMap w(weight.values.data(), out_, in_);
  MatMap ym(y.data(), batch, out_);
  // Row by row: a sample's output must not depend on its batch mates.
  for (std::size_t n = 0; n < batch; ++n) {
    ym.row(static_cast<Eigen::Index>(n)).noalias() = xm.row(static_cast<Eigen::Index>(n)) * w.transpose();
  }
  ym.rowwise() += ConstVecMap(bias.values.data(), out_).transpose();
}

void Linear::backward(std::span<const float> x, std::span<const float> dy, std::size_t batch,
                      std::vector<float>* dx) {
  const ConstMatMap xm(x.data(), batch, in_);
  const ConstMatMap dym(dy.data(), batch, out_);
  MatMap dw(weight.grads.data(), out_, in_);
  dw.noalias() += dym.transpose() * xm;
  VecMap(bias.grads.data(), out_) += dym.colwise().sum().transpose();
  if (dx != nullptr) {
    dx->assign(batch * in_, 0.0f);
    MatMap dxm(dx->data(), batch, in_);
    dxm.noalias() = dym * ConstMatMap(weight.values.data(), out_, in_);
  }
}

}  // namespace cladlab::nn
