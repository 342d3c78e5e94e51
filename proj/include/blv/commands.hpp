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

#include <iosfwd>
#include <string>
#include <vector>

#include "blv/config.hpp"
#include "blv/error.hpp"
#include "blv/metrics.hpp"

namespace blv::cli {

// 0 ok, 1 I/O, 2 config, 3 data/shape, 4 viz, 5 experiment failure.
int exit_code(ErrorKind kind);

int cmd_generate(const RunConfig& config, std::ostream& out);
int cmd_train(const RunConfig& config, std::ostream& out);
int cmd_evaluate(const RunConfig& config, std::ostream& out);
int cmd_project(const RunConfig& config, std::ostream& out);
int cmd_experiment(const RunConfig& config, std::ostream& out);

struct RunRecord {
  std::string variant;
  std::uint64_t seed = 0;
  bool ok = false;
  std::string error;
  MetricsReport test;
};

struct MetricAggregate {
  std::string metric;
  double mean = 0.0;
  double stddev = 0.0;  // sample standard deviation; 0 for a single run
  std::size_t runs = 0;
};

struct VariantSummary {
  std::string variant;
  std::size_t succeeded = 0;
  std::size_t failed = 0;
  std::vector<MetricAggregate> metrics;
};

struct ExperimentSummary {
  std::vector<RunRecord> runs;
  std::vector<VariantSummary> variants;
};

// Metric names in report-grid order: pcc, rmse_standard, rmse_macro, ...
const std::vector<std::string>& summary_metric_names();
// Mean and sample standard deviation of each metric over the successful
// runs of each variant; undefined values are skipped.
ExperimentSummary aggregate_runs(const std::vector<RunRecord>& runs,
                                 const std::vector<std::string>& variant_order);
std::string summary_to_json(const ExperimentSummary& s);
std::string render_summary_table(const ExperimentSummary& s);

// Parses argv (subcommand + flags), runs it, reports errors on `err`.
int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

}  // namespace blv::cli
