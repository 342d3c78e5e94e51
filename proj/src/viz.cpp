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

#include "blv/viz.hpp"

#include <cmath>
#include <limits>

#include "blv/error.hpp"
#include "blv/io.hpp"
#include "blv/rng.hpp"

namespace blv {

void TsneConfig::validate(std::size_t points) const {
  require(points >= 4, "t-SNE needs at least 4 points, got " + std::to_string(points),
          ErrorKind::kViz);
  const double upper = static_cast<double>(points) - 1.0;
  require(perplexity > 1.0 && perplexity < upper,
          "t-SNE perplexity " + format_double(perplexity) + " infeasible for " +
              std::to_string(points) + " points; choose a value in (1, " + format_double(upper) +
              "), e.g. at most " + format_double(std::floor((upper - 1.0) / 3.0) + 1.0),
          ErrorKind::kViz);
  require(iterations >= 250, "t-SNE iterations must be >= 250", ErrorKind::kViz);
  require(learning_rate > 0.0, "t-SNE learning rate must be > 0", ErrorKind::kViz);
  require(early_exaggeration >= 1.0, "t-SNE early exaggeration must be >= 1", ErrorKind::kViz);
  require(exaggeration_iterations < iterations,
          "t-SNE exaggeration phase must end before the last iteration", ErrorKind::kViz);
  require(output_dims >= 1, "t-SNE output dims must be >= 1", ErrorKind::kViz);
  require(kl_every >= 1, "t-SNE kl_every must be >= 1", ErrorKind::kViz);
}

Matrix squared_distances(const Matrix& points) {
  const std::size_t n = points.rows();
  Matrix d(n, n);
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = i + 1; j < n; ++j) {
      double s = 0.0;
      for (std::size_t c = 0; c < points.cols(); ++c) {
        const double diff = points(i, c) - points(j, c);
        s += diff * diff;
      }
      d(i, j) = d(j, i) = s;
    }
  }
  return d;
}

namespace {

// Fills row i of P for precision beta; returns the entropy in nats.
double affinity_row(const Matrix& dist, std::size_t i, double beta, std::span<double> row) {
  const std::size_t n = dist.rows();
  // Shift by the nearest-neighbour distance so exp() never underflows to all zeros.
  double min_d = std::numeric_limits<double>::infinity();
  for (std::size_t j = 0; j < n; ++j)
    if (j != i) min_d = std::min(min_d, dist(i, j));
  double sum = 0.0;
  double weighted = 0.0;
  for (std::size_t j = 0; j < n; ++j) {
    if (j == i) {
      row[j] = 0.0;
      continue;
    }
    const double shifted = dist(i, j) - min_d;
    row[j] = std::exp(-beta * shifted);
    sum += row[j];
    weighted += shifted * row[j];
  }
  for (std::size_t j = 0; j < n; ++j) row[j] /= sum;
  // H = log(sum) + beta * E[shifted distance]
  return std::log(sum) + beta * weighted / sum;
}

}  // namespace

Affinities conditional_affinities(const Matrix& squared_dist, double perplexity,
                                  double log2_tolerance, std::size_t max_steps) {
  const std::size_t n = squared_dist.rows();
  require(n >= 2 && squared_dist.cols() == n, "conditional_affinities: need a square matrix, n >= 2");
  require(perplexity > 0.0, "conditional_affinities: perplexity must be > 0");
  Affinities a{Matrix(n, n), std::vector<double>(n), std::vector<bool>(n, false)};
  const double target = std::log2(perplexity);

  for (std::size_t i = 0; i < n; ++i) {
    auto row = a.conditional.row(i);
    double beta = 1.0;
    double lo = 0.0;
    double hi = std::numeric_limits<double>::infinity();
    double h2 = 0.0;
    for (std::size_t step = 0; step < max_steps; ++step) {
      h2 = affinity_row(squared_dist, i, beta, row) / std::log(2.0);
      const double err = h2 - target;
      if (std::abs(err) <= log2_tolerance) {
        a.converged[i] = true;
        break;
      }
      if (err > 0.0) {
        lo = beta;  // too flat: sharpen
        beta = std::isinf(hi) ? beta * 2.0 : 0.5 * (beta + hi);
      } else {
        hi = beta;
        beta = 0.5 * (beta + lo);
      }
    }
    a.perplexities[i] = std::exp2(h2);
  }
  return a;
}

Matrix joint_affinities(const Matrix& conditional) {
  const std::size_t n = conditional.rows();
  Matrix p(n, n);
  const double norm = 2.0 * static_cast<double>(n);
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = 0; j < n; ++j) p(i, j) = (conditional(i, j) + conditional(j, i)) / norm;
  return p;
}

namespace {

// Student-t numerators (1 + |yi - yj|^2)^-1 and their sum.
double student_kernel(const Matrix& y, Matrix& num) {
  const std::size_t n = y.rows();
  double sum = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    num(i, i) = 0.0;
    for (std::size_t j = i + 1; j < n; ++j) {
      double d = 0.0;
      for (std::size_t c = 0; c < y.cols(); ++c) {
        const double diff = y(i, c) - y(j, c);
        d += diff * diff;
      }
      const double q = 1.0 / (1.0 + d);
      num(i, j) = num(j, i) = q;
      sum += 2.0 * q;
    }
  }
  return sum;
}

double kl_from_kernel(const Matrix& joint, const Matrix& num, double sum) {
  constexpr double kFloor = 1e-300;
  double kl = 0.0;
  const std::size_t n = joint.rows();
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = 0; j < n; ++j) {
      const double p = joint(i, j);
      if (i == j || p <= 0.0) continue;
      kl += p * std::log(p / std::max(num(i, j) / sum, kFloor));
    }
  }
  return std::max(kl, 0.0);
}

}  // namespace

double tsne_kl(const Matrix& joint, const Matrix& embedding) {
  Matrix num(embedding.rows(), embedding.rows());
  const double sum = student_kernel(embedding, num);
  return kl_from_kernel(joint, num, sum);
}

ProjectionResult tsne_project(const Matrix& points, const std::vector<int>& labels,
                              const TsneConfig& config) {
  const std::size_t n = points.rows();
  config.validate(n);
  require(labels.size() == n, "t-SNE: labels length must equal number of points", ErrorKind::kViz);
  require(points.all_finite(), "t-SNE: non-finite input", ErrorKind::kViz);

  ProjectionResult result;
  result.labels = labels;

  const Affinities cond = conditional_affinities(squared_distances(points), config.perplexity);
  result.perplexities = cond.perplexities;
  for (bool ok : cond.converged) result.calibration_failures += ok ? 0 : 1;
  const Matrix p = joint_affinities(cond.conditional);

  const std::size_t dims = config.output_dims;
  Rng rng = Rng(config.seed).child("tsne.init");
  Matrix y(n, dims);
  for (double& v : y.values()) v = 1e-4 * rng.normal();

  Matrix velocity(n, dims);
  Matrix gains(n, dims, 1.0);
  Matrix grad(n, dims);
  Matrix num(n, n);

  auto record_kl = [&](std::size_t iteration) {
    const double sum = student_kernel(y, num);
    result.kl_trace.push_back({iteration, kl_from_kernel(p, num, sum)});
  };
  record_kl(0);

  for (std::size_t iter = 0; iter < config.iterations; ++iter) {
    const double exaggeration = iter < config.exaggeration_iterations ? config.early_exaggeration : 1.0;
    const double momentum = iter < config.momentum_switch_iteration ? config.initial_momentum
                                                                    : config.final_momentum;
    const double sum = student_kernel(y, num);

    // dC/dy_i = 4 sum_j (ex * p_ij - q_ij) (y_i - y_j) / (1 + |y_i - y_j|^2)
    for (double& g : grad.values()) g = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
      for (std::size_t j = 0; j < n; ++j) {
        if (i == j) continue;
        const double w = num(i, j);
        const double coeff = 4.0 * (exaggeration * p(i, j) - w / sum) * w;
        for (std::size_t c = 0; c < dims; ++c) grad(i, c) += coeff * (y(i, c) - y(j, c));
      }
    }

    for (std::size_t k = 0; k < y.size(); ++k) {
      double& gain = gains.values()[k];
      const double g = grad.values()[k];
      double& vel = velocity.values()[k];
      gain = (g > 0.0) != (vel > 0.0) ? gain + 0.2 : gain * 0.8;
      gain = std::max(gain, 0.01);
      vel = momentum * vel - config.learning_rate * gain * g;
      y.values()[k] += vel;
    }

    // Re-centre.
    for (std::size_t c = 0; c < dims; ++c) {
      double mean = 0.0;
      for (std::size_t i = 0; i < n; ++i) mean += y(i, c);
      mean /= static_cast<double>(n);
      for (std::size_t i = 0; i < n; ++i) y(i, c) -= mean;
    }

    const std::size_t done = iter + 1;
    if (done == config.exaggeration_iterations) {
      record_kl(done);
      result.kl_after_exaggeration = result.kl_trace.back().kl;
    } else if (done % config.kl_every == 0 || done == config.iterations) {
      record_kl(done);
    }
  }
  if (config.exaggeration_iterations == 0) result.kl_after_exaggeration = result.kl_trace.front().kl;

  require(y.all_finite(), "t-SNE diverged (non-finite coordinates); lower the learning rate",
          ErrorKind::kViz);
  result.coordinates = std::move(y);
  return result;
}

std::string projection_to_csv(const ProjectionResult& result, const std::string& split) {
  require(result.coordinates.cols() == 2, "projection export expects 2-D coordinates",
          ErrorKind::kViz);
  std::string out = "x,y,label,split\n";
  for (std::size_t i = 0; i < result.coordinates.rows(); ++i) {
    out += format_double(result.coordinates(i, 0));
    out += ',';
    out += format_double(result.coordinates(i, 1));
    out += ',';
    out += std::to_string(result.labels[i]);
    out += ',';
    out += split;
    out += '\n';
  }
  return out;
}

void export_projection(const ProjectionResult& result, const std::string& split,
                       const std::filesystem::path& path) {
  write_file_atomic(path, projection_to_csv(result, split));
}

std::string kl_trace_to_csv(const ProjectionResult& result) {
  std::string out = "iteration,kl\n";
  for (const auto& c : result.kl_trace) {
    out += std::to_string(c.iteration) + "," + format_double(c.kl) + "\n";
  }
  return out;
}

}  // namespace blv
