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

#include "cladlab/losses.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "cladlab/contrastive.hpp"
#include "cladlab/errors.hpp"

namespace cladlab {
namespace {

void check_labels(std::span<const int> labels, Eigen::Index rows) {
  if (static_cast<Eigen::Index>(labels.size()) != rows) {
    throw ArgumentError("label count does not match batch size");
  }
  for (int y : labels) {
    if (y != kReal && y != kFake) throw ArgumentError("labels must be 0 (fake) or 1 (real)");
  }
}

}  // namespace

FeatureMatrix normalize_rows(const FeatureMatrix& x) {
  FeatureMatrix out = x;
  for (Eigen::Index i = 0; i < x.rows(); ++i) {
    const double n = x.row(i).norm();
    if (!(n > 0.0)) throw DomainError("cannot normalize a zero-norm feature row");
    out.row(i) /= n;
  }
  return out;
}

LossWithGrad contrastive_loss(const FeatureMatrix& q, const FeatureMatrix& k_pos,
                              const NegativeQueue& queue, double tau,
                              bool include_positive_in_denominator) {
  if (q.rows() != k_pos.rows() || q.cols() != k_pos.cols()) {
    throw ArgumentError("contrastive_loss: q and k_pos shapes differ");
  }
  if (static_cast<std::size_t>(q.cols()) != queue.dim()) {
    throw ArgumentError("contrastive_loss: feature dim does not match queue dim");
  }
  if (!(tau > 0.0)) throw ArgumentError("contrastive_loss: temperature must be positive");
  const Eigen::Index n = q.rows();
  LossWithGrad out{0.0, FeatureMatrix::Zero(q.rows(), q.cols())};
  if (n == 0) return out;

  const FeatureMatrix qn = normalize_rows(q);
  const FeatureMatrix kn = normalize_rows(k_pos);
  const FeatureMatrix& negatives = queue.storage();

  for (Eigen::Index i = 0; i < n; ++i) {
    const Eigen::RowVectorXd u = qn.row(i);
    const double pos = u.dot(kn.row(i)) / tau;
    const Eigen::VectorXd neg = (negatives * u.transpose()) / tau;

    double max_logit = neg.size() > 0 ? neg.maxCoeff() : pos;
    if (include_positive_in_denominator) max_logit = std::max(max_logit, pos);
    const Eigen::VectorXd neg_exp = (neg.array() - max_logit).exp().matrix();
    const double pos_exp = include_positive_in_denominator ? std::exp(pos - max_logit) : 0.0;
    const double denom = neg_exp.sum() + pos_exp;
    const double lse = max_logit + std::log(denom);
    out.loss += lse - pos;

    // d(loss_i)/du = (sum_j p_j c_j - k_i) / tau over the denominator terms.
    Eigen::RowVectorXd du = (neg_exp.transpose() * negatives) / denom;
    du += (pos_exp / denom - 1.0) * kn.row(i);
    du /= tau;
    const double norm = q.row(i).norm();
    out.grad.row(i) = (du - du.dot(u) * u) / norm;
  }
  out.loss /= static_cast<double>(n);
  out.grad /= static_cast<double>(n);
  return out;
}

LossWithGrad length_loss(const FeatureMatrix& q, std::span<const int> labels, double real_weight,
                         double margin) {
  check_labels(labels, q.rows());
  LossWithGrad out{0.0, FeatureMatrix::Zero(q.rows(), q.cols())};
  const Eigen::Index n = q.rows();
  if (n == 0) return out;
  for (Eigen::Index i = 0; i < n; ++i) {
    const double len = q.row(i).norm();
    if (labels[static_cast<std::size_t>(i)] == kReal) {
      out.loss += real_weight * len;
      if (len > 0.0) out.grad.row(i) = real_weight * q.row(i) / len;
    } else if (len < margin) {
      out.loss += margin - len;
      if (len > 0.0) out.grad.row(i) = -q.row(i) / len;
    }
  }
  out.loss /= static_cast<double>(n);
  out.grad /= static_cast<double>(n);
  return out;
}

double downstream_loss(std::span<const double> p_real, std::span<const int> labels) {
  check_labels(labels, static_cast<Eigen::Index>(p_real.size()));
  if (p_real.empty()) return 0.0;
  double acc = 0.0;
  for (std::size_t i = 0; i < p_real.size(); ++i) {
    const double p = std::clamp(p_real[i], kProbabilityEpsilon, 1.0 - kProbabilityEpsilon);
    acc += labels[i] == kReal ? std::log(p) : std::log(1.0 - p);
  }
  return -acc / static_cast<double>(p_real.size());
}

double real_probability(double logit_fake, double logit_real) {
  const double z = logit_real - logit_fake;
  if (z >= 0.0) return 1.0 / (1.0 + std::exp(-z));
  const double e = std::exp(z);
  return e / (1.0 + e);
}

LossWithGrad downstream_loss_from_logits(const FeatureMatrix& logits, std::span<const int> labels) {
  if (logits.cols() != 2) throw ArgumentError("downstream_loss: expected 2 logits per row");
  check_labels(labels, logits.rows());
  const Eigen::Index n = logits.rows();
  LossWithGrad out{0.0, FeatureMatrix::Zero(n, 2)};
  if (n == 0) return out;
  std::vector<double> p(static_cast<std::size_t>(n));
  for (Eigen::Index i = 0; i < n; ++i) {
    const double pi = real_probability(logits(i, 0), logits(i, 1));
    p[static_cast<std::size_t>(i)] = pi;
    const bool clamped = pi < kProbabilityEpsilon || pi > 1.0 - kProbabilityEpsilon;
    if (!clamped) {
      const double g = (pi - labels[static_cast<std::size_t>(i)]) / static_cast<double>(n);
      out.grad(i, 1) = g;
      out.grad(i, 0) = -g;
    }
  }
  out.loss = downstream_loss(p, labels);
  return out;
}

}  // namespace cladlab
