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

#include "cladlab/encoder.hpp"

namespace cladlab {

class NegativeQueue;

// Binary class labels: 1 = real (bonafide), 0 = fake (spoof).
inline constexpr int kReal = 1;
inline constexpr int kFake = 0;

struct LossWithGrad {
  double loss = 0.0;
  FeatureMatrix grad;  // d(loss)/d(input), same shape as the input
};

// Row-wise unit normalization. Throws DomainError on a zero-norm row.
FeatureMatrix normalize_rows(const FeatureMatrix& x);

// InfoNCE over cosine similarities. For each row i the logits are
// [q_i . k_i / tau, q_i . n_1 / tau, ..., q_i . n_K / tau] with q, k unit-
// normalized; the loss is the batch mean of -log softmax(logits)[0]. With
// include_positive_in_denominator = false the softmax denominator sums over
// the queue only. The gradient is taken w.r.t. the unnormalized q; keys and
// queue are constants.
LossWithGrad contrastive_loss(const FeatureMatrix& q, const FeatureMatrix& k_pos,
                              const NegativeQueue& queue, double tau,
                              bool include_positive_in_denominator = true);

// Mean of y*w*|q| + (1-y)*max(margin - |q|, 0) over rows of the raw features.
// The subgradient at |q| = 0 is taken as zero.
LossWithGrad length_loss(const FeatureMatrix& q, std::span<const int> labels, double real_weight,
                         double margin);

inline constexpr double kProbabilityEpsilon = 1e-7;

// Binary cross-entropy on real-probabilities clamped to [eps, 1 - eps].
double downstream_loss(std::span<const double> p_real, std::span<const int> labels);

// Same loss from 2-way logits (fake, real); p_real = softmax(logits)[1].
LossWithGrad downstream_loss_from_logits(const FeatureMatrix& logits, std::span<const int> labels);

double real_probability(double logit_fake, double logit_real);

}  // namespace cladlab
