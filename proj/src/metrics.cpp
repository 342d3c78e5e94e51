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

#include "blv/metrics.hpp"

#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <map>
#include <numeric>

#include <json.hpp>

#include "blv/error.hpp"

namespace blv {

using ordered_json = nlohmann::ordered_json;

std::int64_t ConfusionMatrix::total() const {
  return std::accumulate(counts.begin(), counts.end(), std::int64_t{0});
}

std::int64_t ConfusionMatrix::row_sum(std::size_t t) const {
  std::int64_t s = 0;
  for (std::size_t p = 0; p < classes; ++p) s += (*this)(t, p);
  return s;
}

std::int64_t ConfusionMatrix::col_sum(std::size_t p) const {
  std::int64_t s = 0;
  for (std::size_t t = 0; t < classes; ++t) s += (*this)(t, p);
  return s;
}

namespace {

void check_pair(const std::vector<int>& truth, const std::vector<int>& pred) {
  require(truth.size() == pred.size(), "metrics: truth and prediction lengths differ");
  require(!truth.empty(), "metrics: empty input");
}

// Per-true-class grouping of sample indices, ordered by class.
std::map<int, std::vector<std::size_t>> by_class(const std::vector<int>& truth) {
  std::map<int, std::vector<std::size_t>> groups;
  for (std::size_t i = 0; i < truth.size(); ++i) groups[truth[i]].push_back(i);
  return groups;
}

double adjacent_fraction(const std::vector<int>& truth, const std::vector<int>& pred,
                         const std::vector<std::size_t>& idx) {
  std::size_t hits = 0;
  for (std::size_t i : idx) hits += std::abs(pred[i] - truth[i]) <= 1 ? 1 : 0;
  return static_cast<double>(hits) / static_cast<double>(idx.size());
}

double root_mean_square(const std::vector<int>& truth, const std::vector<int>& pred,
                        const std::vector<std::size_t>& idx) {
  double sq = 0.0;
  for (std::size_t i : idx) {
    const double e = pred[i] - truth[i];
    sq += e * e;
  }
  return std::sqrt(sq / static_cast<double>(idx.size()));
}

std::vector<std::size_t> all_indices(std::size_t n) {
  std::vector<std::size_t> idx(n);
  std::iota(idx.begin(), idx.end(), 0);
  return idx;
}

}  // namespace

ConfusionMatrix confusion(const std::vector<int>& truth, const std::vector<int>& pred,
                          std::size_t classes) {
  require(truth.size() == pred.size(), "confusion: truth and prediction lengths differ");
  require(classes >= 1, "confusion: need at least one class");
  ConfusionMatrix cm{classes, std::vector<std::int64_t>(classes * classes, 0)};
  for (std::size_t i = 0; i < truth.size(); ++i) {
    require(truth[i] >= 0 && static_cast<std::size_t>(truth[i]) < classes &&
                pred[i] >= 0 && static_cast<std::size_t>(pred[i]) < classes,
            "confusion: label out of range at sample " + std::to_string(i));
    ++cm(static_cast<std::size_t>(truth[i]), static_cast<std::size_t>(pred[i]));
  }
  return cm;
}

double accuracy(const ConfusionMatrix& cm, bool macro) {
  const std::int64_t total = cm.total();
  require(cm.classes >= 1 && total > 0, "accuracy: empty confusion matrix");
  if (!macro) {
    std::int64_t diag = 0;
    for (std::size_t k = 0; k < cm.classes; ++k) diag += cm(k, k);
    return static_cast<double>(diag) / static_cast<double>(total);
  }
  double sum = 0.0;
  for (std::size_t k = 0; k < cm.classes; ++k) {
    const std::int64_t support = cm.row_sum(k);
    require(support > 0, "accuracy: macro average undefined, class " + std::to_string(k) +
                             " has no true samples");
    sum += static_cast<double>(cm(k, k)) / static_cast<double>(support);
  }
  return sum / static_cast<double>(cm.classes);
}

double adjacent_accuracy(const std::vector<int>& truth, const std::vector<int>& pred, bool macro) {
  check_pair(truth, pred);
  if (!macro) return adjacent_fraction(truth, pred, all_indices(truth.size()));
  const auto groups = by_class(truth);
  double sum = 0.0;
  for (const auto& [label, idx] : groups) sum += adjacent_fraction(truth, pred, idx);
  return sum / static_cast<double>(groups.size());
}

double rmse(const std::vector<int>& truth, const std::vector<int>& pred, bool macro) {
  check_pair(truth, pred);
  if (!macro) return root_mean_square(truth, pred, all_indices(truth.size()));
  const auto groups = by_class(truth);
  double sum = 0.0;
  for (const auto& [label, idx] : groups) sum += root_mean_square(truth, pred, idx);
  return sum / static_cast<double>(groups.size());
}

double pcc(const std::vector<int>& truth, const std::vector<int>& pred) {
  check_pair(truth, pred);
  const double n = static_cast<double>(truth.size());
  double mt = 0.0, mp = 0.0;
  for (std::size_t i = 0; i < truth.size(); ++i) {
    mt += truth[i];
    mp += pred[i];
  }
  mt /= n;
  mp /= n;
  double stt = 0.0, spp = 0.0, stp = 0.0;
  for (std::size_t i = 0; i < truth.size(); ++i) {
    const double dt = truth[i] - mt;
    const double dp = pred[i] - mp;
    stt += dt * dt;
    spp += dp * dp;
    stp += dt * dp;
  }
  if (stt == 0.0 || spp == 0.0) fail(ErrorKind::kInvalidArgument, "PCC undefined for constant series");
  return stp / std::sqrt(stt * spp);
}

namespace {

double class_f1(const ConfusionMatrix& cm, std::size_t k, double* precision, double* recall) {
  const double tp = static_cast<double>(cm(k, k));
  const std::int64_t col = cm.col_sum(k);
  const std::int64_t row = cm.row_sum(k);
  const double p = col > 0 ? tp / static_cast<double>(col) : 0.0;
  const double r = row > 0 ? tp / static_cast<double>(row) : 0.0;
  if (precision) *precision = p;
  if (recall) *recall = r;
  return p + r > 0.0 ? 2.0 * p * r / (p + r) : 0.0;
}

}  // namespace

double f1_macro(const ConfusionMatrix& cm) {
  require(cm.classes >= 1, "f1_macro: empty confusion matrix");
  double sum = 0.0;
  for (std::size_t k = 0; k < cm.classes; ++k) sum += class_f1(cm, k, nullptr, nullptr);
  return sum / static_cast<double>(cm.classes);
}

MetricsReport full_report(const std::vector<int>& truth, const std::vector<int>& pred,
                          std::size_t classes) {
  check_pair(truth, pred);
  MetricsReport r;
  r.confusion = confusion(truth, pred, classes);

  try {
    r.pcc.value = pcc(truth, pred);
  } catch (const Error& e) {
    r.pcc.reason = e.what();
  }
  r.rmse_standard = rmse(truth, pred, false);
  r.accuracy_standard = accuracy(r.confusion, false);
  r.adjacent_accuracy_standard = adjacent_accuracy(truth, pred, false);
  r.f1_macro = f1_macro(r.confusion);

  std::string missing;
  for (std::size_t k = 0; k < classes && missing.empty(); ++k) {
    if (r.confusion.row_sum(k) == 0) {
      missing = "macro average undefined: class " + std::to_string(k) + " has no true samples";
    }
  }
  if (missing.empty()) {
    r.rmse_macro.value = rmse(truth, pred, true);
    r.accuracy_macro.value = accuracy(r.confusion, true);
    r.adjacent_accuracy_macro.value = adjacent_accuracy(truth, pred, true);
  } else {
    r.rmse_macro.reason = r.accuracy_macro.reason = r.adjacent_accuracy_macro.reason = missing;
  }

  const auto groups = by_class(truth);
  r.per_class.resize(classes);
  for (std::size_t k = 0; k < classes; ++k) {
    ClassBreakdown& c = r.per_class[k];
    c.support = r.confusion.row_sum(k);
    c.predicted = r.confusion.col_sum(k);
    c.f1 = class_f1(r.confusion, k, &c.precision, &c.recall);
    if (auto it = groups.find(static_cast<int>(k)); it != groups.end()) {
      c.rmse = root_mean_square(truth, pred, it->second);
      c.adjacent_accuracy = adjacent_fraction(truth, pred, it->second);
    }
  }
  return r;
}

// ---------------------------------------------------------------------------
// Rendering

namespace {

ordered_json optional_json(const std::optional<double>& v) {
  return v ? ordered_json(*v) : ordered_json(nullptr);
}

std::string cell(const std::optional<double>& v, double scale, int precision) {
  if (!v) return "n/a";
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%.*f", precision, *v * scale);
  return buf;
}

}  // namespace

std::string report_to_json(const MetricsReport& r, const std::vector<std::string>& class_names) {
  require(class_names.size() == r.confusion.classes, "report_to_json: class_names size mismatch");
  ordered_json j;
  j["samples"] = r.confusion.total();
  ordered_json m;
  m["pcc"] = optional_json(r.pcc.value);
  m["rmse"] = {{"standard", r.rmse_standard}, {"macro", optional_json(r.rmse_macro.value)}};
  m["accuracy"] = {{"standard", r.accuracy_standard},
                   {"macro", optional_json(r.accuracy_macro.value)}};
  m["adjacent_accuracy"] = {{"standard", r.adjacent_accuracy_standard},
                            {"macro", optional_json(r.adjacent_accuracy_macro.value)}};
  m["f1_macro"] = r.f1_macro;
  j["metrics"] = std::move(m);

  ordered_json undefined = ordered_json::object();
  if (!r.pcc.value) undefined["pcc"] = r.pcc.reason;
  if (!r.rmse_macro.value) undefined["rmse.macro"] = r.rmse_macro.reason;
  if (!r.accuracy_macro.value) undefined["accuracy.macro"] = r.accuracy_macro.reason;
  if (!r.adjacent_accuracy_macro.value)
    undefined["adjacent_accuracy.macro"] = r.adjacent_accuracy_macro.reason;
  j["undefined"] = std::move(undefined);

  j["definitions"] = {
      {"accuracy.macro", "unweighted mean of per-class recall"},
      {"rmse.macro", "unweighted mean over true classes of per-class RMSE"},
      {"adjacent_accuracy", "fraction with |pred - true| <= 1"},
      {"f1_macro", "unweighted mean of per-class F1; 0 for a class with P + R = 0"},
      {"pcc", "Pearson correlation of argmax class indices"},
  };

  ordered_json cm;
  cm["labels"] = class_names;
  ordered_json rows = ordered_json::array();
  for (std::size_t t = 0; t < r.confusion.classes; ++t) {
    std::vector<std::int64_t> row;
    for (std::size_t p = 0; p < r.confusion.classes; ++p) row.push_back(r.confusion(t, p));
    rows.push_back(row);
  }
  cm["counts"] = std::move(rows);
  j["confusion"] = std::move(cm);

  ordered_json per = ordered_json::array();
  for (std::size_t k = 0; k < r.per_class.size(); ++k) {
    const ClassBreakdown& c = r.per_class[k];
    ordered_json e;
    e["class"] = class_names[k];
    e["support"] = c.support;
    e["predicted"] = c.predicted;
    e["precision"] = c.precision;
    e["recall"] = c.recall;
    e["f1"] = c.f1;
    e["rmse"] = optional_json(c.rmse);
    e["adjacent_accuracy"] = optional_json(c.adjacent_accuracy);
    per.push_back(std::move(e));
  }
  j["per_class"] = std::move(per);
  return j.dump(2) + "\n";
}

std::string render_report_table(const std::vector<std::pair<std::string, MetricsReport>>& rows) {
  std::string out;
  char line[512];
  std::snprintf(line, sizeof(line), "%-22s %8s %9s %9s %9s %9s %9s %9s %8s\n", "Method", "PCC",
                "RMSE", "RMSE", "Acc(%)", "Acc(%)", "Adj(%)", "Adj(%)", "F1");
  out += line;
  std::snprintf(line, sizeof(line), "%-22s %8s %9s %9s %9s %9s %9s %9s %8s\n", "", "",
                "Standard", "Macro", "Standard", "Macro", "Standard", "Macro", "Macro");
  out += line;
  for (const auto& [name, r] : rows) {
    std::snprintf(line, sizeof(line), "%-22s %8s %9s %9s %9s %9s %9s %9s %8s\n", name.c_str(),
                  cell(r.pcc.value, 1.0, 4).c_str(), cell(r.rmse_standard, 1.0, 4).c_str(),
                  cell(r.rmse_macro.value, 1.0, 4).c_str(),
                  cell(r.accuracy_standard, 100.0, 2).c_str(),
                  cell(r.accuracy_macro.value, 100.0, 2).c_str(),
                  cell(r.adjacent_accuracy_standard, 100.0, 2).c_str(),
                  cell(r.adjacent_accuracy_macro.value, 100.0, 2).c_str(),
                  cell(r.f1_macro, 1.0, 4).c_str());
    out += line;
  }
  return out;
}

std::string confusion_to_csv(const ConfusionMatrix& cm, const std::vector<std::string>& class_names) {
  require(class_names.size() == cm.classes, "confusion_to_csv: class_names size mismatch");
  std::string out = "true\\pred";
  for (const auto& n : class_names) out += "," + n;
  out += "\n";
  for (std::size_t t = 0; t < cm.classes; ++t) {
    out += class_names[t];
    for (std::size_t p = 0; p < cm.classes; ++p) out += "," + std::to_string(cm(t, p));
    out += "\n";
  }
  return out;
}

}  // namespace blv
