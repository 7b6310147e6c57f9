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
#include <numbers>
#include <random>
#include <vector>

#include <gtest/gtest.h>

#include "cladlab/contrastive.hpp"
#include "cladlab/errors.hpp"
#include "cladlab/losses.hpp"
#include "oracles.hpp"

namespace cladlab {
namespace {

FeatureMatrix to_eigen(const oracle::Matrix& m) {
  FeatureMatrix out(static_cast<Eigen::Index>(m.size()), static_cast<Eigen::Index>(m[0].size()));
  for (std::size_t i = 0; i < m.size(); ++i) {
    for (std::size_t j = 0; j < m[i].size(); ++j) out(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) = m[i][j];
  }
  return out;
}

oracle::Matrix unit_rows(oracle::Matrix m) {
  for (auto& r : m) {
    const double n = oracle::norm(r);
    for (auto& x : r) x /= n;
  }
  return m;
}

// Queue whose storage is exactly `rows` (K pushes fill every slot in order).
NegativeQueue queue_with(const oracle::Matrix& rows) {
  NegativeQueue q(rows.size(), rows[0].size(), 0);
  q.push(to_eigen(rows));
  return q;
}

TEST(ContrastiveLoss, AlignedPositiveOrthogonalQueue) {
  const std::size_t k = 6144;
  const double tau = 0.07;
  const oracle::Matrix q{{1.0, 0.0}};
  const oracle::Matrix negs(k, {0.0, 1.0});
  const NegativeQueue queue = queue_with(negs);
  const LossWithGrad r = contrastive_loss(to_eigen(q), to_eigen(q), queue, tau);
  const double expected = std::log1p(6144.0 * std::exp(-1.0 / tau));
  EXPECT_NEAR(r.loss, expected, 1e-12);
  EXPECT_NEAR(r.loss, 6144.0 * std::exp(-1.0 / tau), 1e-5);
}

TEST(ContrastiveLoss, UniformSimilaritiesGiveLogOfCount) {
  const oracle::Matrix q{{0.6, 0.8}};
  const NegativeQueue queue = queue_with({{0.6, 0.8}, {0.6, 0.8}, {0.6, 0.8}});
  const LossWithGrad r = contrastive_loss(to_eigen(q), to_eigen(q), queue, 0.07);
  EXPECT_NEAR(r.loss, std::log(4.0), 1e-9);
  EXPECT_NEAR(r.loss, 1.386294, 1e-6);
}

TEST(ContrastiveLoss, MatchesDirectSummationOracle) {
  std::mt19937_64 rng(1);
  for (int trial = 0; trial < 50; ++trial) {
    const std::size_t n = 1 + rng() % 4;
    const std::size_t d = 2 + rng() % 6;
    const std::size_t k = 1 + rng() % 8;
    const auto q = oracle::random_matrix(n, d, rng);
    const auto kp = oracle::random_matrix(n, d, rng);
    const auto negs = unit_rows(oracle::random_matrix(k, d, rng));
    const NegativeQueue queue = queue_with(negs);
    for (bool include : {true, false}) {
      const double tau = 0.2 + 0.5 * static_cast<double>(rng() % 100) / 100.0;
      const double got = contrastive_loss(to_eigen(q), to_eigen(kp), queue, tau, include).loss;
      EXPECT_NEAR(got, oracle::contrastive(q, kp, negs, tau, include), 1e-6);
    }
  }
  const auto q = oracle::random_matrix(2, 2, rng);
  const auto kp = oracle::random_matrix(2, 2, rng);
  const auto negs = unit_rows(oracle::random_matrix(3, 2, rng));
  EXPECT_NEAR(contrastive_loss(to_eigen(q), to_eigen(kp), queue_with(negs), 0.07).loss,
              oracle::contrastive(q, kp, negs, 0.07, true), 1e-6);
}

TEST(ContrastiveLoss, GradientMatchesFiniteDifferences) {
  std::mt19937_64 rng(2);
  const double tau = 0.5;
  for (int trial = 0; trial < 30; ++trial) {
    const std::size_t n = 1 + rng() % 4;
    const std::size_t d = 2 + rng() % 7;
    const std::size_t k = 1 + rng() % 8;
    const auto q = oracle::random_matrix(n, d, rng);
    const auto kp = oracle::random_matrix(n, d, rng);
    const auto negs = unit_rows(oracle::random_matrix(k, d, rng));
    const NegativeQueue queue = queue_with(negs);
    const LossWithGrad r = contrastive_loss(to_eigen(q), to_eigen(kp), queue, tau);
    const double h = 1e-6;
    for (std::size_t i = 0; i < n; ++i) {
      for (std::size_t j = 0; j < d; ++j) {
        auto up = q;
        auto down = q;
        up[i][j] += h;
        down[i][j] -= h;
        const double fd = (oracle::contrastive(up, kp, negs, tau, true) - oracle::contrastive(down, kp, negs, tau, true)) / (2 * h);
        const double an = r.grad(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j));
        EXPECT_LE(std::abs(an - fd), 1e-4 * std::max(1.0, std::abs(fd))) << trial;
      }
    }
  }
}

TEST(ContrastiveLoss, InvariantToPositiveRowScaling) {
  std::mt19937_64 rng(3);
  const auto q = oracle::random_matrix(3, 5, rng);
  const auto kp = oracle::random_matrix(3, 5, rng);
  const NegativeQueue queue = queue_with(unit_rows(oracle::random_matrix(6, 5, rng)));
  const double base = contrastive_loss(to_eigen(q), to_eigen(kp), queue, 0.07).loss;
  for (double c : {1e-3, 0.5, 7.0, 1e4}) {
    auto scaled = q;
    for (auto& x : scaled[1]) x *= c;
    auto kscaled = kp;
    for (auto& x : kscaled[2]) x *= c;
    EXPECT_NEAR(contrastive_loss(to_eigen(scaled), to_eigen(kscaled), queue, 0.07).loss, base, 1e-6);
  }
}

TEST(ContrastiveLoss, ZeroRowIsDomainError) {
  const NegativeQueue queue = queue_with({{1.0, 0.0}});
  FeatureMatrix q(1, 2);
  q << 0.0, 0.0;
  FeatureMatrix k(1, 2);
  k << 1.0, 0.0;
  EXPECT_THROW(contrastive_loss(q, k, queue, 0.07), DomainError);
  EXPECT_THROW(contrastive_loss(k, q, queue, 0.07), DomainError);
  EXPECT_THROW(normalize_rows(q), DomainError);
}

TEST(ContrastiveLoss, StableAtSmallTemperature) {
  const NegativeQueue queue = queue_with({{-1.0, 0.0}, {0.0, 1.0}});
  FeatureMatrix q(1, 2);
  q << 1.0, 0.0;
  const LossWithGrad r = contrastive_loss(q, q, queue, 1e-3);
  EXPECT_TRUE(std::isfinite(r.loss));
  EXPECT_TRUE(r.grad.allFinite());
}

TEST(LengthLoss, Examples) {
  const std::vector<int> real{kReal};
  const std::vector<int> fake{kFake};
  FeatureMatrix zero(1, 3);
  zero.setZero();
  EXPECT_EQ(length_loss(zero, real, 9.0, 4.0).loss, 0.0);
  FeatureMatrix five(1, 2);
  five << 3.0, 4.0;
  EXPECT_EQ(length_loss(five, fake, 9.0, 4.0).loss, 0.0);
  FeatureMatrix batch(2, 2);
  batch << 0.0, 2.0, 3.0, 0.0;
  EXPECT_NEAR(length_loss(batch, std::vector<int>{kReal, kFake}, 9.0, 4.0).loss, 9.5, 1e-12);
}

TEST(LengthLoss, MatchesOracleAndFiniteDifferences) {
  std::mt19937_64 rng(4);
  for (int trial = 0; trial < 50; ++trial) {
    const std::size_t n = 1 + rng() % 6;
    const std::size_t d = 2 + rng() % 6;
    const auto q = oracle::random_matrix(n, d, rng, 2.0);
    std::vector<int> y(n);
    for (auto& v : y) v = static_cast<int>(rng() % 2);
    const double w = 9.0;
    const double margin = 4.0;
    const LossWithGrad r = length_loss(to_eigen(q), y, w, margin);
    EXPECT_NEAR(r.loss, oracle::length(q, y, w, margin), 1e-12);
    const double h = 1e-6;
    for (std::size_t i = 0; i < n; ++i) {
      if (std::abs(oracle::norm(q[i]) - margin) < 1e-3) continue;
      for (std::size_t j = 0; j < d; ++j) {
        auto up = q;
        auto down = q;
        up[i][j] += h;
        down[i][j] -= h;
        const double fd = (oracle::length(up, y, w, margin) - oracle::length(down, y, w, margin)) / (2 * h);
        EXPECT_LE(std::abs(r.grad(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) - fd),
                  1e-4 * std::max(1.0, std::abs(fd)));
      }
    }
  }
}

TEST(LengthLoss, NotScaleInvariant) {
  FeatureMatrix q(1, 3);
  q << 0.3, -1.2, 0.5;
  const std::vector<int> y{kReal};
  const double one = length_loss(q, y, 9.0, 4.0).loss;
  EXPECT_DOUBLE_EQ(length_loss(2.0 * q, y, 9.0, 4.0).loss, 2.0 * one);
}

TEST(LengthLoss, OriginHasZeroGradient) {
  FeatureMatrix q(2, 2);
  q.setZero();
  const LossWithGrad r = length_loss(q, std::vector<int>{kReal, kFake}, 9.0, 4.0);
  EXPECT_TRUE(r.grad.isZero());
  EXPECT_NEAR(r.loss, 2.0, 1e-12);
}

TEST(LengthLoss, BadLabelIsArgumentError) {
  FeatureMatrix q(1, 2);
  q << 1.0, 1.0;
  EXPECT_THROW(length_loss(q, std::vector<int>{2}, 9.0, 4.0), ArgumentError);
}

TEST(PretrainLoss, WeightedSum) {
  EXPECT_EQ(pretrain_loss(1.5, 3.0, 0.0).total, 1.5);
  EXPECT_EQ(pretrain_loss(1.0, 2.0, 2.0).total, 5.0);
  EXPECT_EQ(pretrain_loss(0.7, 0.0, 123.0).total, 0.7);
  std::mt19937_64 rng(5);
  std::uniform_real_distribution<double> u(0.0, 10.0);
  for (int i = 0; i < 1000; ++i) {
    const double cl = u(rng);
    const double len = u(rng);
    const double lam = u(rng);
    const LossBreakdown b = pretrain_loss(cl, len, lam);
    EXPECT_NEAR(b.total, b.contrastive + lam * b.length, 1e-9);
  }
}

TEST(DownstreamLoss, Examples) {
  EXPECT_NEAR(downstream_loss(std::vector<double>{1.0 - 1e-7}, std::vector<int>{1}), 0.0, 1e-6);
  EXPECT_NEAR(downstream_loss(std::vector<double>{0.5}, std::vector<int>{1}), 0.693147, 1e-6);
  EXPECT_NEAR(downstream_loss(std::vector<double>{0.5}, std::vector<int>{0}), 0.693147, 1e-6);
  EXPECT_NEAR(downstream_loss(std::vector<double>{0.25}, std::vector<int>{0}), 0.287682, 1e-6);
  EXPECT_TRUE(std::isfinite(downstream_loss(std::vector<double>{0.0, 1.0}, std::vector<int>{1, 0})));
}

TEST(DownstreamLoss, MatchesOracle) {
  std::mt19937_64 rng(6);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  for (int trial = 0; trial < 100; ++trial) {
    const std::size_t n = 1 + rng() % 10;
    std::vector<double> p(n);
    std::vector<int> y(n);
    for (std::size_t i = 0; i < n; ++i) {
      p[i] = u(rng);
      y[i] = static_cast<int>(rng() % 2);
    }
    EXPECT_NEAR(downstream_loss(p, y), oracle::bce(p, y), 1e-12);
  }
}

TEST(DownstreamLoss, LogitGradientMatchesFiniteDifferences) {
  std::mt19937_64 rng(7);
  std::normal_distribution<double> g(0.0, 2.0);
  for (int trial = 0; trial < 50; ++trial) {
    const std::size_t n = 1 + rng() % 5;
    FeatureMatrix logits(static_cast<Eigen::Index>(n), 2);
    for (Eigen::Index i = 0; i < logits.size(); ++i) logits.data()[i] = g(rng);
    std::vector<int> y(n);
    for (auto& v : y) v = static_cast<int>(rng() % 2);
    const LossWithGrad r = downstream_loss_from_logits(logits, y);
    auto loss_of = [&](const FeatureMatrix& l) {
      std::vector<double> p(n);
      for (std::size_t i = 0; i < n; ++i) {
        const double z0 = l(static_cast<Eigen::Index>(i), 0);
        const double z1 = l(static_cast<Eigen::Index>(i), 1);
        p[i] = std::exp(z1) / (std::exp(z0) + std::exp(z1));
      }
      return oracle::bce(p, y);
    };
    EXPECT_NEAR(r.loss, loss_of(logits), 1e-12);
    const double h = 1e-6;
    for (Eigen::Index i = 0; i < logits.size(); ++i) {
      FeatureMatrix up = logits;
      FeatureMatrix down = logits;
      up.data()[i] += h;
      down.data()[i] -= h;
      const double fd = (loss_of(up) - loss_of(down)) / (2 * h);
      EXPECT_LE(std::abs(r.grad.data()[i] - fd), 1e-4 * std::max(1.0, std::abs(fd)));
    }
  }
}

TEST(RealProbability, SoftmaxExamples) {
  EXPECT_DOUBLE_EQ(real_probability(0.0, 0.0), 0.5);
  EXPECT_NEAR(real_probability(0.0, std::log(3.0)), 0.75, 1e-12);
  EXPECT_NEAR(real_probability(1000.0, -1000.0), 0.0, 1e-12);
  EXPECT_NEAR(real_probability(-1000.0, 1000.0), 1.0, 1e-12);
  for (double a : {-3.0, 0.2, 5.0}) {
    for (double b : {-1.0, 0.0, 4.0}) EXPECT_NEAR(real_probability(a, b) + real_probability(b, a), 1.0, 1e-12);
  }
}

}  // namespace
}  // namespace cladlab
