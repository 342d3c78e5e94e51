/*
 * Copyright 2026 The BLV Authors.
 * Licensed under the Apache License, Version 2.0 (the "License");
 * you may not use this file except in compliance with the License.
 * You may obtain a copy of the License at
 *
 *     https://www.apache.org/licenses/LICENSE-2.0
 *
 * Unless required by applicable law or agreed to in writing, software
 * distributed under the License is distributed on an "AS IS" BASIS,
 * WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
 * See the License for the specific language governing permissions and
 * limitations under the License.
 */

#include "blv/losses.hpp"

#include <gtest/gtest.h>

#include <cmath>
#include <numbers>
#include <random>

#include "blv/error.hpp"
#include "test_util.hpp"

namespace blv {
namespace {

using testing::all_close;
using testing::central_difference;
using testing::random_labels;
using testing::random_matrix;

ClassStats stats_from_alpha(std::vector<double> alpha) {
  ClassStats s;
  s.alpha = std::move(alpha);
  s.counts.assign(s.alpha.size(), 1);
  s.total = static_cast<std::int64_t>(s.alpha.size());
  return s;
}

ClassStats random_stats(std::mt19937_64& gen, std::size_t classes) {
  std::uniform_int_distribution<int> count(1, 200);
  std::vector<int> labels;
  for (std::size_t k = 0; k < classes; ++k) labels.insert(labels.end(), count(gen), static_cast<int>(k));
  return compute_class_stats(labels, classes);
}

Matrix abs_normal(std::mt19937_64& gen, std::size_t rows, std::size_t cols, double sigma) {
  Matrix m = random_matrix(gen, rows, cols, sigma);
  for (double& v : m.values()) v = std::abs(v);
  return m;
}

TEST(Perturb, ZeroSigmaIsIdentity) {
  std::mt19937_64 gen(1);
  const Matrix z = random_matrix(gen, 3, 4);
  Rng rng(0);
  EXPECT_EQ(perturb_logits(z, stats_from_alpha({1, 0.5, 0.2, 0.9}), 0.0, {&rng, nullptr}), z);
}

TEST(Perturb, HandEvaluatedOverride) {
  const Matrix z{{1, 2}};
  const Matrix delta{{1.5, 1.5}};
  const Matrix out = perturb_logits(z, stats_from_alpha({0.5, 1.0}), 1.0, {nullptr, &delta});
  EXPECT_DOUBLE_EQ(out(0, 0), 1.75);
  EXPECT_DOUBLE_EQ(out(0, 1), 3.5);
}

TEST(Perturb, NeverDecreasesLogits) {
  std::mt19937_64 gen(2);
  const Matrix z = random_matrix(gen, 50, 6, 4.0);
  Rng rng(3);
  const Matrix out = perturb_logits(z, random_stats(gen, 6), 2.0, {&rng, nullptr});
  for (std::size_t k = 0; k < z.size(); ++k) EXPECT_GE(out.values()[k], z.values()[k]);
}

TEST(Perturb, ShapeMismatchRejected) {
  const Matrix z(2, 3);
  Rng rng(0);
  EXPECT_THROW(perturb_logits(z, stats_from_alpha({1, 1}), 1.0, {&rng, nullptr}), Error);
  const Matrix bad(2, 2);
  EXPECT_THROW(perturb_logits(z, stats_from_alpha({1, 1, 1}), 1.0, {nullptr, &bad}), Error);
}

TEST(CrossEntropy, AnalyticValues) {
  EXPECT_NEAR(cross_entropy(Matrix{{0, 0}}, {0}).value, std::log(2.0), 1e-15);
  EXPECT_NEAR(cross_entropy(Matrix{{std::log(3.0), 0}}, {1}).value, std::log(4.0), 1e-15);
}

TEST(CrossEntropy, GradientRowsSumToZero) {
  std::mt19937_64 gen(4);
  for (int trial = 0; trial < 100; ++trial) {
    const Matrix z = random_matrix(gen, 8, 7, 5.0);
    const LossResult r = cross_entropy(z, random_labels(gen, 8, 7));
    EXPECT_GE(r.value, 0.0);
    for (std::size_t i = 0; i < 8; ++i) {
      double s = 0.0;
      for (double g : r.grad.row(i)) s += g;
      EXPECT_NEAR(s, 0.0, 1e-12);
    }
  }
}

TEST(CrossEntropy, GradientMatchesFiniteDifferences) {
  std::mt19937_64 gen(5);
  const Matrix z = random_matrix(gen, 4, 6);
  const auto y = random_labels(gen, 4, 6);
  const Matrix fd = central_difference([&](const Matrix& m) { return cross_entropy(m, y).value; }, z);
  EXPECT_TRUE(all_close(cross_entropy(z, y).grad, fd, 1e-4, 1e-7));
}

TEST(CrossEntropy, ShapeErrors) {
  EXPECT_THROW(cross_entropy(Matrix(2, 3), {0}), Error);
  EXPECT_THROW(cross_entropy(Matrix(1, 3), {3}), Error);
}

TEST(Focal, GammaZeroIsCrossEntropy) {
  std::mt19937_64 gen(6);
  for (int trial = 0; trial < 100; ++trial) {
    const Matrix z = random_matrix(gen, 5, 4, 3.0);
    const auto y = random_labels(gen, 5, 4);
    const LossResult a = focal_loss(z, y, 0.0);
    const LossResult b = cross_entropy(z, y);
    EXPECT_NEAR(a.value, b.value, 1e-12);
    EXPECT_LE(testing::max_abs_diff(a.grad, b.grad), 1e-12);
  }
}

TEST(Focal, AnalyticHalfProbability) {
  EXPECT_NEAR(focal_loss(Matrix{{0, 0}}, {0}, 2.0).value, 0.25 * std::log(2.0), 1e-15);
}

TEST(Focal, GradientMatchesFiniteDifferences) {
  std::mt19937_64 gen(7);
  for (double gamma : {0.5, 2.0, 5.0}) {
    const Matrix z = random_matrix(gen, 4, 6);
    const auto y = random_labels(gen, 4, 6);
    const Matrix fd =
        central_difference([&](const Matrix& m) { return focal_loss(m, y, gamma).value; }, z);
    EXPECT_TRUE(all_close(focal_loss(z, y, gamma).grad, fd, 1e-4, 1e-7)) << "gamma " << gamma;
  }
}

TEST(Focal, SaturatedTargetHasFiniteGradient) {
  const LossResult r = focal_loss(Matrix{{800, 0, 0}}, {0}, 0.5);
  EXPECT_TRUE(r.grad.all_finite());
  EXPECT_NEAR(r.value, 0.0, 1e-300);
}

TEST(Blv, ZeroSigmaIsCrossEntropy) {
  std::mt19937_64 gen(8);
  Rng rng(1);
  for (int trial = 0; trial < 100; ++trial) {
    const Matrix z = random_matrix(gen, 6, 5, 3.0);
    const auto y = random_labels(gen, 6, 5);
    const LossResult a = blv_loss(z, y, random_stats(gen, 5), 0.0, {&rng, nullptr}, true);
    const LossResult b = cross_entropy(z, y);
    EXPECT_NEAR(a.value, b.value, 1e-12);
    EXPECT_LE(testing::max_abs_diff(a.grad, b.grad), 1e-12);
  }
}

TEST(Blv, HandEvaluatedExample) {
  const Matrix delta{{0, std::log(2.0)}};
  const ClassStats s = stats_from_alpha({0.5, 1.0});
  const Matrix zh = perturb_logits(Matrix{{0, 0}}, s, 1.0, {nullptr, &delta});
  EXPECT_DOUBLE_EQ(zh(0, 0), 0.0);
  EXPECT_DOUBLE_EQ(zh(0, 1), std::log(2.0));
  const LossResult r = blv_loss(Matrix{{0, 0}}, {0}, s, 1.0, {nullptr, &delta}, true);
  EXPECT_NEAR(r.value, std::log(3.0), 1e-15);
}

TEST(Blv, GradientAtFixedNoiseMatchesFiniteDifferences) {
  std::mt19937_64 gen(9);
  const Matrix z = random_matrix(gen, 4, 6);
  const auto y = random_labels(gen, 4, 6);
  const ClassStats s = random_stats(gen, 6);
  const Matrix delta = abs_normal(gen, 4, 6, 2.0);
  const NoiseSource fixed{nullptr, &delta};
  const Matrix fd = central_difference(
      [&](const Matrix& m) { return blv_loss(m, y, s, 2.0, fixed, true).value; }, z);
  EXPECT_TRUE(all_close(blv_loss(z, y, s, 2.0, fixed, true).grad, fd, 1e-4, 1e-7));
}

TEST(Blv, InferenceModeIsUnperturbed) {
  std::mt19937_64 gen(10);
  const Matrix z = random_matrix(gen, 4, 3);
  const auto y = random_labels(gen, 4, 3);
  Rng rng(0);
  const LossResult a = blv_loss(z, y, random_stats(gen, 3), 6.0, {&rng, nullptr}, false);
  EXPECT_EQ(a.value, cross_entropy(z, y).value);
  EXPECT_EQ(rng.counter(), 0u);
}

TEST(Blv, CompetitorPerturbationRaisesLoss) {
  std::mt19937_64 gen(11);
  const ClassStats s = stats_from_alpha({1.0, 0.8, 0.3});
  for (int trial = 0; trial < 50; ++trial) {
    const Matrix z = random_matrix(gen, 1, 3);
    // True class 0 gets nothing; a competitor gets a positive push.
    const Matrix delta{{0.0, 1.0 + trial * 0.1, 0.0}};
    const double blv = blv_loss(z, {0}, s, 1.0, {nullptr, &delta}, true).value;
    EXPECT_GT(blv, cross_entropy(z, {0}).value);
  }
}

TEST(Blv, UniformShiftLeavesLossUnchanged) {
  std::mt19937_64 gen(12);
  const ClassStats s = stats_from_alpha({1.0, 1.0, 1.0, 1.0});
  const Matrix z = random_matrix(gen, 3, 4);
  const std::vector<int> y = {0, 3, 1};
  Matrix delta(3, 4);
  for (std::size_t i = 0; i < 3; ++i)
    for (std::size_t k = 0; k < 4; ++k) delta(i, k) = 0.7 + static_cast<double>(i);
  EXPECT_NEAR(blv_loss(z, y, s, 1.0, {nullptr, &delta}, true).value, cross_entropy(z, y).value,
              1e-12);
}

// E over |d0|, |d1| (half-normal, scale sigma) of log(1 + exp(a1|d1| - a0|d0|)),
// the BLV loss of z = [0, 0], y = 0. Composite Simpson on [0, 12 sigma]^2.
double blv_expectation_quadrature(double a0, double a1, double sigma) {
  const int n = 1200;  // even
  const double upper = 12.0 * sigma;
  const double h = upper / n;
  const double norm = std::sqrt(2.0 / std::numbers::pi) / sigma;
  auto density = [&](double x) { return norm * std::exp(-0.5 * x * x / (sigma * sigma)); };
  auto weight = [&](int i) { return (i == 0 || i == n) ? 1.0 : (i % 2 ? 4.0 : 2.0); };
  double total = 0.0;
  for (int i = 0; i <= n; ++i) {
    const double u = i * h;
    double inner = 0.0;
    for (int j = 0; j <= n; ++j) {
      const double v = j * h;
      const double x = a1 * v - a0 * u;
      const double loss = x > 0 ? x + std::log1p(std::exp(-x)) : std::log1p(std::exp(x));
      inner += weight(j) * density(v) * loss;
    }
    total += weight(i) * density(u) * inner * h / 3.0;
  }
  return total * h / 3.0;
}

TEST(Blv, MonteCarloMeanMatchesQuadrature) {
  const ClassStats s = stats_from_alpha({0.5, 1.0});
  const double sigma = 1.0;
  Rng rng(77);
  double sum = 0.0;
  const int draws = 100000;
  for (int i = 0; i < draws; ++i) {
    sum += blv_loss(Matrix{{0, 0}}, {0}, s, sigma, {&rng, nullptr}, true).value;
  }
  const double mc = sum / draws;
  const double exact = blv_expectation_quadrature(0.5, 1.0, sigma);
  EXPECT_NEAR(mc, exact, 0.01 * exact);
}

TEST(ComputeLoss, DispatchesAndValidates) {
  std::mt19937_64 gen(13);
  const Matrix z = random_matrix(gen, 2, 3);
  const std::vector<int> y = {1, 2};
  LossConfig c;
  c.kind = LossKind::kFocal;
  c.gamma = 0.0;
  EXPECT_NEAR(compute_loss(c, z, y, nullptr, nullptr).value, cross_entropy(z, y).value, 1e-12);
  c.kind = LossKind::kBlv;
  EXPECT_THROW(compute_loss(c, z, y, nullptr, nullptr), Error);
  c.sigma = -1.0;
  EXPECT_THROW(c.validate(), Error);
  EXPECT_EQ(parse_loss_kind("ce"), LossKind::kCrossEntropy);
  EXPECT_THROW(parse_loss_kind("hinge"), Error);
}

}  // namespace
}  // namespace blv
