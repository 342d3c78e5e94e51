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

#include "blv/numerics.hpp"

#include <Eigen/Dense>
#include <algorithm>
#include <cmath>
#include <limits>

#include "blv/error.hpp"

namespace blv {

Matrix::Matrix(std::size_t rows, std::size_t cols, std::vector<double> data)
    : rows_(rows), cols_(cols), data_(std::move(data)) {
  require(data_.size() == rows_ * cols_, "matrix storage does not match its shape");
}

Matrix::Matrix(std::initializer_list<std::initializer_list<double>> rows) {
  rows_ = rows.size();
  cols_ = rows_ == 0 ? 0 : rows.begin()->size();
  data_.reserve(rows_ * cols_);
  for (const auto& r : rows) {
    require(r.size() == cols_, "ragged matrix initializer");
    data_.insert(data_.end(), r.begin(), r.end());
  }
}

bool Matrix::all_finite() const noexcept {
  return std::all_of(data_.begin(), data_.end(), [](double v) { return std::isfinite(v); });
}

namespace {

void check_logits(std::span<const double> z, const char* op) {
  require(!z.empty(), std::string(op) + ": empty input");
  for (double v : z) require(std::isfinite(v), std::string(op) + ": non-finite input");
}

}  // namespace

double log_sum_exp(std::span<const double> z) {
  check_logits(z, "log_sum_exp");
  const double m = *std::max_element(z.begin(), z.end());
  double s = 0.0;
  for (double v : z) s += std::exp(v - m);
  return m + std::log(s);
}

Vector softmax(std::span<const double> z) {
  check_logits(z, "softmax");
  const double m = *std::max_element(z.begin(), z.end());
  Vector p(z.size());
  double s = 0.0;
  for (std::size_t i = 0; i < z.size(); ++i) {
    p[i] = std::exp(z[i] - m);
    s += p[i];
  }
  for (double& v : p) v /= s;
  return p;
}

Vector log_softmax(std::span<const double> z) {
  const double lse = log_sum_exp(z);
  Vector out(z.begin(), z.end());
  for (double& v : out) v -= lse;
  return out;
}

Vector sample_normal(Rng& rng, double sigma, std::size_t count) {
  require(sigma >= 0.0 && std::isfinite(sigma), "sample_normal: sigma must be finite and >= 0");
  Vector out(count, 0.0);
  if (sigma == 0.0) return out;
  for (double& v : out) v = sigma * rng.normal();
  return out;
}

Matrix pca_project(const Matrix& points, std::size_t dims) {
  const std::size_t n = points.rows();
  const std::size_t d = points.cols();
  require(n >= 2, "pca_project: need at least two rows");
  require(dims >= 1 && dims <= std::min(n, d), "pca_project: dims must be in [1, min(rows, cols)]");
  require(points.all_finite(), "pca_project: non-finite input");

  Eigen::MatrixXd x(n, d);
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = 0; j < d; ++j) x(i, j) = points(i, j);
  x.rowwise() -= x.colwise().mean();

  const Eigen::MatrixXd scatter = x.transpose() * x;
  if (scatter.trace() <= 0.0) fail(ErrorKind::kInvalidArgument, "pca_project: zero variance (all rows identical)");

  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> solver(scatter);
  require(solver.info() == Eigen::Success, "pca_project: eigendecomposition failed");

  // Eigenvalues come back ascending.
  Eigen::MatrixXd axes(d, dims);
  for (std::size_t k = 0; k < dims; ++k) {
    Eigen::VectorXd v = solver.eigenvectors().col(static_cast<Eigen::Index>(d - 1 - k));
    Eigen::Index pivot = 0;
    v.cwiseAbs().maxCoeff(&pivot);
    if (v(pivot) < 0.0) v = -v;
    axes.col(static_cast<Eigen::Index>(k)) = v;
  }

  const Eigen::MatrixXd projected = x * axes;
  Matrix out(n, dims);
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t k = 0; k < dims; ++k) out(i, k) = projected(i, k);
  return out;
}

}  // namespace blv
