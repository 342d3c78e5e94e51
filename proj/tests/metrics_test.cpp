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

#include <gtest/gtest.h>

#include <algorithm>
#include <cmath>
#include <random>

#include <json.hpp>

#include "blv/error.hpp"

namespace blv {
namespace {

ConfusionMatrix cm_from(std::vector<std::vector<std::int64_t>> rows) {
  ConfusionMatrix cm{rows.size(), {}};
  for (const auto& r : rows) cm.counts.insert(cm.counts.end(), r.begin(), r.end());
  return cm;
}

TEST(Confusion, PerfectIsDiagonal) {
  const ConfusionMatrix cm = confusion({0, 1, 2, 2}, {0, 1, 2, 2}, 3);
  EXPECT_EQ(cm, cm_from({{1, 0, 0}, {0, 1, 0}, {0, 0, 2}}));
}

TEST(Confusion, HandCount) {
  EXPECT_EQ(confusion({0, 0, 1, 1}, {0, 1, 1, 1}, 2), cm_from({{1, 1}, {0, 2}}));
}

TEST(Confusion, RowSumsAreTrueCounts) {
  std::mt19937_64 gen(1);
  std::uniform_int_distribution<int> lab(0, 4);
  std::vector<int> t(500), p(500);
  for (std::size_t i = 0; i < 500; ++i) {
    t[i] = lab(gen);
    p[i] = lab(gen);
  }
  const ConfusionMatrix cm = confusion(t, p, 5);
  for (std::size_t k = 0; k < 5; ++k) {
    EXPECT_EQ(cm.row_sum(k), std::count(t.begin(), t.end(), static_cast<int>(k)));
    EXPECT_EQ(cm.col_sum(k), std::count(p.begin(), p.end(), static_cast<int>(k)));
  }
  EXPECT_EQ(cm.total(), 500);
}

TEST(Confusion, Errors) {
  EXPECT_THROW(confusion({0, 1}, {0}, 2), Error);
  EXPECT_THROW(confusion({0, 2}, {0, 1}, 2), Error);
}

TEST(Accuracy, Values) {
  EXPECT_EQ(accuracy(cm_from({{3, 0}, {0, 2}}), false), 1.0);
  EXPECT_EQ(accuracy(cm_from({{3, 0}, {0, 2}}), true), 1.0);
  EXPECT_DOUBLE_EQ(accuracy(cm_from({{1, 1}, {0, 2}}), false), 0.75);
  EXPECT_DOUBLE_EQ(accuracy(cm_from({{1, 1}, {0, 2}}), true), 0.75);
  EXPECT_DOUBLE_EQ(accuracy(cm_from({{0, 1}, {0, 99}}), false), 0.99);
  EXPECT_DOUBLE_EQ(accuracy(cm_from({{0, 1}, {0, 99}}), true), 0.5 * (0.0 + 1.0));
}

TEST(Accuracy, MacroRequiresEveryClass) {
  EXPECT_THROW(accuracy(cm_from({{2, 0}, {0, 0}}), true), Error);
  EXPECT_EQ(accuracy(cm_from({{2, 0}, {0, 0}}), false), 1.0);
}

TEST(Accuracy, MinorityErrorsDepressMacro) {
  // 90 majority all right, 10 minority half wrong.
  std::vector<int> t(100, 0), p(100, 0);
  for (int i = 90; i < 100; ++i) {
    t[i] = 1;
    p[i] = i < 95 ? 0 : 1;
  }
  const ConfusionMatrix cm = confusion(t, p, 2);
  EXPECT_GT(accuracy(cm, false), accuracy(cm, true));
  // Equal per-class recalls make the two coincide.
  const ConfusionMatrix even = cm_from({{8, 2}, {20, 80}});
  EXPECT_NEAR(accuracy(even, false), accuracy(even, true), 1e-15);
}

TEST(AdjacentAccuracy, Values) {
  EXPECT_EQ(adjacent_accuracy({0, 1, 2, 3}, {1, 2, 3, 4}, false), 1.0);
  EXPECT_EQ(adjacent_accuracy({0, 1, 2, 3}, {1, 2, 3, 4}, true), 1.0);
  EXPECT_EQ(adjacent_accuracy({4, 4, 4}, {0, 0, 0}, false), 0.0);
  EXPECT_DOUBLE_EQ(adjacent_accuracy({0, 2, 4}, {1, 4, 4}, false), 2.0 / 3.0);
  EXPECT_DOUBLE_EQ(adjacent_accuracy({0, 0, 1}, {3, 0, 1}, true), 0.5 * (0.5 + 1.0));
}

TEST(AdjacentAccuracy, AtLeastExactAccuracy) {
  std::mt19937_64 gen(2);
  std::uniform_int_distribution<int> lab(0, 4);
  for (int trial = 0; trial < 200; ++trial) {
    std::vector<int> t(20), p(20);
    for (std::size_t i = 0; i < 20; ++i) {
      t[i] = lab(gen);
      p[i] = lab(gen);
    }
    EXPECT_GE(adjacent_accuracy(t, p, false), accuracy(confusion(t, p, 5), false));
  }
}

TEST(Rmse, Values) {
  EXPECT_EQ(rmse({0, 1, 2}, {0, 1, 2}, false), 0.0);
  EXPECT_DOUBLE_EQ(rmse({1, 1}, {0, 2}, false), 1.0);
  EXPECT_DOUBLE_EQ(rmse({0, 0, 1}, {2, 0, 1}, false), std::sqrt(4.0 / 3.0));
  EXPECT_DOUBLE_EQ(rmse({0, 0, 1}, {2, 0, 1}, true), 0.5 * (std::sqrt(2.0) + 0.0));
  EXPECT_THROW(rmse({}, {}, false), Error);
}

TEST(Pcc, Values) {
  EXPECT_NEAR(pcc({0, 1, 2, 3, 4}, {0, 1, 2, 3, 4}), 1.0, 1e-15);
  EXPECT_NEAR(pcc({0, 1, 2, 3, 4}, {4, 3, 2, 1, 0}), -1.0, 1e-15);
  EXPECT_NEAR(pcc({0, 1, 2, 3}, {0, 2, 1, 3}), 0.8, 1e-15);
  try {
    pcc({1, 1, 1}, {0, 1, 2});
    FAIL();
  } catch (const Error& e) {
    EXPECT_NE(std::string(e.what()).find("PCC undefined for constant series"), std::string::npos);
  }
}

TEST(F1, Values) {
  EXPECT_EQ(f1_macro(cm_from({{2, 0}, {0, 5}})), 1.0);
  EXPECT_NEAR(f1_macro(cm_from({{1, 1}, {0, 2}})), 11.0 / 15.0, 1e-15);
  // Class 2 never true and never predicted contributes 0.
  EXPECT_NEAR(f1_macro(cm_from({{1, 0, 0}, {0, 1, 0}, {0, 0, 0}})), 2.0 / 3.0, 1e-15);
}

TEST(FullReport, PerfectPredictions) {
  const std::vector<int> t = {0, 1, 2, 1, 0, 2};
  const MetricsReport r = full_report(t, t, 3);
  EXPECT_EQ(*r.pcc.value, 1.0);
  EXPECT_EQ(r.rmse_standard, 0.0);
  EXPECT_EQ(*r.rmse_macro.value, 0.0);
  EXPECT_EQ(r.accuracy_standard, 1.0);
  EXPECT_EQ(*r.accuracy_macro.value, 1.0);
  EXPECT_EQ(r.adjacent_accuracy_standard, 1.0);
  EXPECT_EQ(*r.adjacent_accuracy_macro.value, 1.0);
  EXPECT_EQ(r.f1_macro, 1.0);
}

TEST(FullReport, UndefinedValuesCarryReasons) {
  const MetricsReport r = full_report({0, 0, 0}, {0, 1, 0}, 2);
  EXPECT_FALSE(r.pcc.value);
  EXPECT_FALSE(r.pcc.reason.empty());
  EXPECT_FALSE(r.accuracy_macro.value);
  EXPECT_NE(r.accuracy_macro.reason.find("class 1"), std::string::npos);
  const auto j = nlohmann::json::parse(report_to_json(r, {"a", "b"}));
  EXPECT_TRUE(j["metrics"]["pcc"].is_null());
  EXPECT_TRUE(j["undefined"].contains("pcc"));
}

TEST(FullReport, MatchesComponentsOnRandomCases) {
  std::mt19937_64 gen(3);
  std::uniform_int_distribution<int> lab(0, 4);
  for (int trial = 0; trial < 100; ++trial) {
    std::vector<int> t, p;
    for (int k = 0; k < 5; ++k) {  // every class present
      t.push_back(k);
      p.push_back(lab(gen));
    }
    for (int i = 0; i < 25; ++i) {
      t.push_back(lab(gen));
      p.push_back(lab(gen));
    }
    const MetricsReport r = full_report(t, p, 5);
    const ConfusionMatrix cm = confusion(t, p, 5);
    EXPECT_EQ(r.confusion, cm);
    EXPECT_EQ(r.accuracy_standard, accuracy(cm, false));
    EXPECT_EQ(*r.accuracy_macro.value, accuracy(cm, true));
    EXPECT_EQ(r.adjacent_accuracy_standard, adjacent_accuracy(t, p, false));
    EXPECT_EQ(*r.adjacent_accuracy_macro.value, adjacent_accuracy(t, p, true));
    EXPECT_EQ(r.rmse_standard, rmse(t, p, false));
    EXPECT_EQ(*r.rmse_macro.value, rmse(t, p, true));
    EXPECT_EQ(r.f1_macro, f1_macro(cm));
    EXPECT_EQ(*r.pcc.value, pcc(t, p));
  }
}

TEST(FullReport, InvariantUnderSamplePermutation) {
  std::mt19937_64 gen(4);
  std::uniform_int_distribution<int> lab(0, 3);
  std::vector<int> t(40), p(40);
  for (std::size_t i = 0; i < 40; ++i) {
    t[i] = i < 4 ? static_cast<int>(i) : lab(gen);
    p[i] = lab(gen);
  }
  const MetricsReport a = full_report(t, p, 4);
  std::vector<std::size_t> order(40);
  for (std::size_t i = 0; i < 40; ++i) order[i] = i;
  std::shuffle(order.begin(), order.end(), gen);
  std::vector<int> t2, p2;
  for (std::size_t i : order) {
    t2.push_back(t[i]);
    p2.push_back(p[i]);
  }
  const MetricsReport b = full_report(t2, p2, 4);
  EXPECT_EQ(a.confusion, b.confusion);
  EXPECT_NEAR(*a.pcc.value, *b.pcc.value, 1e-12);
  EXPECT_NEAR(a.rmse_standard, b.rmse_standard, 1e-12);
  EXPECT_NEAR(*a.rmse_macro.value, *b.rmse_macro.value, 1e-12);
  EXPECT_EQ(a.accuracy_standard, b.accuracy_standard);
  EXPECT_EQ(a.f1_macro, b.f1_macro);
}

TEST(Rendering, JsonTableAndCsvShapes) {
  const MetricsReport r = full_report({0, 1, 2, 2}, {0, 2, 2, 1}, 3);
  const auto j = nlohmann::json::parse(report_to_json(r, {"A2", "B1", "B2"}));
  EXPECT_EQ(j["samples"], 4);
  EXPECT_EQ(j["confusion"]["counts"][2], nlohmann::json({0, 1, 1}));
  EXPECT_EQ(j["per_class"].size(), 3u);
  EXPECT_TRUE(j["metrics"]["accuracy"].contains("macro"));

  const std::string csv = confusion_to_csv(r.confusion, {"A2", "B1", "B2"});
  EXPECT_EQ(std::count(csv.begin(), csv.end(), '\n'), 4);
  EXPECT_EQ(csv.substr(0, csv.find('\n')), "true\\pred,A2,B1,B2");

  const std::string table = render_report_table({{"baseline", r}});
  EXPECT_NE(table.find("PCC"), std::string::npos);
  EXPECT_NE(table.find("50.00"), std::string::npos);  // standard accuracy as a percentage
}

}  // namespace
}  // namespace blv
