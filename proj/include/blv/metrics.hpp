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

#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

namespace blv {

// counts[t][p]: rows are true classes, columns predictions.
struct ConfusionMatrix {
  std::size_t classes = 0;
  std::vector<std::int64_t> counts;

  std::int64_t operator()(std::size_t t, std::size_t p) const { return counts[t * classes + p]; }
  std::int64_t& operator()(std::size_t t, std::size_t p) { return counts[t * classes + p]; }
  std::int64_t total() const;
  std::int64_t row_sum(std::size_t t) const;
  std::int64_t col_sum(std::size_t p) const;

  friend bool operator==(const ConfusionMatrix&, const ConfusionMatrix&) = default;
};

ConfusionMatrix confusion(const std::vector<int>& truth, const std::vector<int>& pred,
                          std::size_t classes);

double accuracy(const ConfusionMatrix& cm, bool macro);
double adjacent_accuracy(const std::vector<int>& truth, const std::vector<int>& pred, bool macro);
double rmse(const std::vector<int>& truth, const std::vector<int>& pred, bool macro);
double pcc(const std::vector<int>& truth, const std::vector<int>& pred);
double f1_macro(const ConfusionMatrix& cm);

// A metric that may be undefined on a given input (constant series for PCC,
// an absent true class for the macro variants).
struct OptionalMetric {
  std::optional<double> value;
  std::string reason;

  friend bool operator==(const OptionalMetric&, const OptionalMetric&) = default;
};

struct ClassBreakdown {
  std::int64_t support = 0;
  std::int64_t predicted = 0;
  double precision = 0.0;
  double recall = 0.0;
  double f1 = 0.0;
  std::optional<double> rmse;
  std::optional<double> adjacent_accuracy;

  friend bool operator==(const ClassBreakdown&, const ClassBreakdown&) = default;
};

struct MetricsReport {
  OptionalMetric pcc;
  double rmse_standard = 0.0;
  OptionalMetric rmse_macro;
  double accuracy_standard = 0.0;
  OptionalMetric accuracy_macro;
  double adjacent_accuracy_standard = 0.0;
  OptionalMetric adjacent_accuracy_macro;
  double f1_macro = 0.0;
  ConfusionMatrix confusion;
  std::vector<ClassBreakdown> per_class;

  friend bool operator==(const MetricsReport&, const MetricsReport&) = default;
};

MetricsReport full_report(const std::vector<int>& truth, const std::vector<int>& pred,
                          std::size_t classes);

// JSON document with the PCC / RMSE / Accuracy / Adjacent Accuracy / F1 grid,
// confusion matrix and per-class rows.
std::string report_to_json(const MetricsReport& r, const std::vector<std::string>& class_names);
// Fixed-width table; accuracy-family columns rendered as percentages.
std::string render_report_table(const std::vector<std::pair<std::string, MetricsReport>>& rows);
// Header row plus one row per true class.
std::string confusion_to_csv(const ConfusionMatrix& cm, const std::vector<std::string>& class_names);

}  // namespace blv
