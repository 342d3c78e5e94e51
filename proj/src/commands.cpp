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

#include "blv/commands.hpp"

#include <atomic>
#include <cmath>
#include <filesystem>
#include <iostream>
#include <mutex>
#include <thread>

#include <CLI11.hpp>
#include <json.hpp>

#include "blv/io.hpp"
#include "blv/numerics.hpp"

namespace blv::cli {

namespace fs = std::filesystem;
using ordered_json = nlohmann::ordered_json;

int exit_code(ErrorKind kind) {
  switch (kind) {
    case ErrorKind::kIo: return 1;
    case ErrorKind::kConfig: return 2;
    case ErrorKind::kInvalidArgument:
    case ErrorKind::kData: return 3;
    case ErrorKind::kViz: return 4;
    case ErrorKind::kExperiment: return 5;
  }
  return 1;
}

namespace {

struct Splits {
  Dataset train, dev, test;
};

fs::path run_dir(const RunConfig& c, const std::string& command) {
  const std::string id = c.get("run.id").empty() ? command : c.get("run.id");
  return fs::path(c.get("output.dir")) / id;
}

Splits generate_splits(const RunConfig& c, std::uint64_t seed, std::vector<std::string>* warnings) {
  GeneratorSpec spec = generator_spec(c);
  spec.seed = seed;
  const Dataset full = generate_longtail(spec);
  SplitResult s = split_dataset(full, split_fractions(c), seed);
  if (warnings) *warnings = s.warnings;
  return {std::move(s.train), std::move(s.dev), std::move(s.test)};
}

// input.data: a directory holding {train,dev,test}.jsonl, or empty to
// synthesise the splits from the data.* keys.
Splits load_or_generate_splits(const RunConfig& c) {
  const std::string& dir = c.get("input.data");
  if (dir.empty()) return generate_splits(c, c.get_uint("seed"), nullptr);
  const fs::path root(dir);
  if (!fs::is_directory(root)) {
    fail(ErrorKind::kData, "input.data must be a directory with train/dev/test .jsonl files: " + dir);
  }
  return {load_dataset(root / "train.jsonl"), load_dataset(root / "dev.jsonl"),
          load_dataset(root / "test.jsonl")};
}

// input.data as a single file, or a directory plus input.split.
Dataset load_eval_dataset(const RunConfig& c) {
  const std::string& data = c.get("input.data");
  if (data.empty()) fail(ErrorKind::kConfig, "input.data (--data) is required");
  fs::path p(data);
  if (fs::is_directory(p)) p /= c.get("input.split") + ".jsonl";
  return load_dataset(p);
}

Checkpoint load_input_checkpoint(const RunConfig& c) {
  const std::string& path = c.get("input.checkpoint");
  if (path.empty()) fail(ErrorKind::kConfig, "input.checkpoint (--checkpoint) is required");
  return load_checkpoint(path);
}

void check_compatible(const Checkpoint& ck, const Dataset& d) {
  if (ck.head.dim() != d.dim || ck.head.classes() != d.classes) {
    fail(ErrorKind::kData, "checkpoint expects dim " + std::to_string(ck.head.dim()) + " and " +
                               std::to_string(ck.head.classes()) + " classes but dataset has dim " +
                               std::to_string(d.dim) + " and " + std::to_string(d.classes) +
                               " classes");
  }
}

std::string slug(const Variant& v) {
  switch (v.loss.kind) {
    case LossKind::kCrossEntropy: return "ce";
    case LossKind::kFocal: return "focal_gamma" + format_double(v.loss.gamma);
    case LossKind::kBlv: return "blv_sigma" + format_double(v.loss.sigma);
  }
  return "variant";
}

std::optional<double> metric_value(const MetricsReport& r, const std::string& name) {
  if (name == "pcc") return r.pcc.value;
  if (name == "rmse_standard") return r.rmse_standard;
  if (name == "rmse_macro") return r.rmse_macro.value;
  if (name == "accuracy_standard") return r.accuracy_standard;
  if (name == "accuracy_macro") return r.accuracy_macro.value;
  if (name == "adjacent_accuracy_standard") return r.adjacent_accuracy_standard;
  if (name == "adjacent_accuracy_macro") return r.adjacent_accuracy_macro.value;
  if (name == "f1_macro") return r.f1_macro;
  return std::nullopt;
}

}  // namespace

// ---------------------------------------------------------------------------

int cmd_generate(const RunConfig& config, std::ostream& out) {
  config.validate();
  const GeneratorSpec spec = generator_spec(config);
  std::vector<std::string> warnings;
  const Splits s = generate_splits(config, spec.seed, &warnings);

  const fs::path dir = run_dir(config, "generate");
  StagedDirectory stage(dir);
  save_dataset(s.train, stage / "train.jsonl");
  save_dataset(s.dev, stage / "dev.jsonl");
  save_dataset(s.test, stage / "test.jsonl");

  auto class_counts = [&](const Dataset& d) {
    std::vector<std::int64_t> counts(d.classes, 0);
    for (int y : d.labels) ++counts[static_cast<std::size_t>(y)];
    return counts;
  };
  std::vector<std::int64_t> total(spec.classes, 0);
  for (const Dataset* d : {&s.train, &s.dev, &s.test}) {
    const auto c = class_counts(*d);
    for (std::size_t k = 0; k < c.size(); ++k) total[k] += c[k];
  }

  ordered_json m;
  m["seed"] = spec.seed;
  m["rng"] = std::string(Rng::kAlgorithm);
  m["classes"] = spec.classes;
  m["class_names"] = s.train.class_names;
  m["dim"] = spec.dim;
  m["samples"] = spec.samples;
  m["priors"] = spec.resolved_priors();
  m["counts"] = total;
  m["splits"] = {{"train", class_counts(s.train)},
                 {"dev", class_counts(s.dev)},
                 {"test", class_counts(s.test)}};
  m["warnings"] = warnings;
  write_file_atomic(stage / "manifest.json", m.dump(2) + "\n");
  write_file_atomic(stage / "config.echo", config.echo());
  stage.commit();

  out << "wrote " << s.train.size() << "/" << s.dev.size() << "/" << s.test.size()
      << " train/dev/test samples to " << dir.string() << "\n";
  for (const auto& w : warnings) out << "warning: " << w << "\n";
  return 0;
}

int cmd_train(const RunConfig& config, std::ostream& out) {
  config.validate();
  const TrainConfig tc = train_config(config);
  const Splits s = load_or_generate_splits(config);

  const TrainReport report = train(s.train, &s.dev, tc);
  const Prediction dev_pred = predict(report.head, s.dev);
  const MetricsReport dev_metrics = full_report(s.dev.labels, dev_pred.labels, s.dev.classes);
  const Checkpoint ck{report.head, report.optimizer, report.rng_cursors};

  const fs::path dir = run_dir(config, "train");
  StagedDirectory stage(dir);
  save_checkpoint(ck, stage / "checkpoint.json");
  write_file_atomic(stage / "report.json", report_to_json(dev_metrics, s.dev.class_names));
  const std::string table = render_report_table({{to_string(tc.loss.kind), dev_metrics}});
  write_file_atomic(stage / "report.txt", table);
  write_file_atomic(stage / "confusion.csv", confusion_to_csv(dev_metrics.confusion, s.dev.class_names));

  ordered_json tr;
  tr["epochs"] = report.epoch_losses.size();
  tr["epoch_losses"] = report.epoch_losses;
  tr["train_accuracy"] = report.train_accuracy;
  ordered_json per_epoch = ordered_json::array();
  for (const auto& m : report.dev_metrics) {
    per_epoch.push_back({{"accuracy_standard", m.accuracy_standard},
                         {"accuracy_macro", m.accuracy_macro.value ? ordered_json(*m.accuracy_macro.value)
                                                                   : ordered_json(nullptr)},
                         {"f1_macro", m.f1_macro}});
  }
  tr["dev_metrics"] = std::move(per_epoch);
  tr["wall_clock_seconds"] = report.wall_clock_seconds;
  write_file_atomic(stage / "train_report.json", tr.dump(2) + "\n");
  write_file_atomic(stage / "config.echo", config.echo());
  stage.commit();

  out << "train accuracy: " << format_double(report.train_accuracy) << "\n";
  out << "dev metrics:\n" << table;
  return 0;
}

int cmd_evaluate(const RunConfig& config, std::ostream& out) {
  config.validate();
  const Checkpoint ck = load_input_checkpoint(config);
  const Dataset d = load_eval_dataset(config);
  check_compatible(ck, d);
  const Prediction p = predict(ck.head, d);
  const MetricsReport r = full_report(d.labels, p.labels, d.classes);

  StagedDirectory stage(run_dir(config, "evaluate"));
  write_file_atomic(stage / "report.json", report_to_json(r, d.class_names));
  const std::string table = render_report_table({{"checkpoint", r}});
  write_file_atomic(stage / "report.txt", table);
  write_file_atomic(stage / "confusion.csv", confusion_to_csv(r.confusion, d.class_names));
  write_file_atomic(stage / "config.echo", config.echo());
  stage.commit();
  out << table;
  return 0;
}

int cmd_project(const RunConfig& config, std::ostream& out) {
  config.validate();
  const Checkpoint ck = load_input_checkpoint(config);
  const Dataset d = load_eval_dataset(config);
  check_compatible(ck, d);
  const Prediction p = predict(ck.head, d);

  ProjectionResult result;
  if (config.get("project.method") == "pca") {
    if (d.size() < 2 || d.classes < 2) fail(ErrorKind::kViz, "PCA projection needs >= 2 points and >= 2 classes");
    try {
      result.coordinates = pca_project(p.logits, 2);
    } catch (const Error& e) {
      fail(ErrorKind::kViz, e.what());
    }
    result.labels = d.labels;
  } else {
    result = tsne_project(p.logits, d.labels, tsne_config(config));
  }

  StagedDirectory stage(run_dir(config, "project"));
  export_projection(result, config.get("input.split"), stage / "projection.csv");
  write_file_atomic(stage / "kl_trace.csv", kl_trace_to_csv(result));
  write_file_atomic(stage / "config.echo", config.echo());
  stage.commit();
  out << "projected " << d.size() << " logit vectors";
  if (!result.kl_trace.empty()) {
    out << "; KL " << format_double(result.kl_trace.front().kl) << " -> "
        << format_double(result.kl_trace.back().kl);
  }
  out << "\n";
  return 0;
}

// ---------------------------------------------------------------------------
// Experiment harness

const std::vector<std::string>& summary_metric_names() {
  static const std::vector<std::string> names = {
      "pcc",           "rmse_standard",  "rmse_macro", "accuracy_standard", "accuracy_macro",
      "adjacent_accuracy_standard", "adjacent_accuracy_macro", "f1_macro"};
  return names;
}

ExperimentSummary aggregate_runs(const std::vector<RunRecord>& runs,
                                 const std::vector<std::string>& variant_order) {
  ExperimentSummary s;
  s.runs = runs;
  for (const auto& name : variant_order) {
    VariantSummary v;
    v.variant = name;
    for (const auto& r : runs) {
      if (r.variant != name) continue;
      (r.ok ? v.succeeded : v.failed)++;
    }
    for (const auto& metric : summary_metric_names()) {
      std::vector<double> xs;
      for (const auto& r : runs) {
        if (r.variant != name || !r.ok) continue;
        if (auto x = metric_value(r.test, metric)) xs.push_back(*x);
      }
      MetricAggregate a{metric, 0.0, 0.0, xs.size()};
      if (!xs.empty()) {
        for (double x : xs) a.mean += x;
        a.mean /= static_cast<double>(xs.size());
        if (xs.size() > 1) {
          double ss = 0.0;
          for (double x : xs) ss += (x - a.mean) * (x - a.mean);
          a.stddev = std::sqrt(ss / static_cast<double>(xs.size() - 1));
        }
      }
      v.metrics.push_back(a);
    }
    s.variants.push_back(std::move(v));
  }
  return s;
}

std::string summary_to_json(const ExperimentSummary& s) {
  ordered_json j;
  ordered_json variants = ordered_json::array();
  const VariantSummary* baseline = nullptr;
  for (const auto& v : s.variants)
    if (v.variant == "ce") baseline = &v;
  for (const auto& v : s.variants) {
    ordered_json e;
    e["variant"] = v.variant;
    e["succeeded"] = v.succeeded;
    e["failed"] = v.failed;
    ordered_json metrics;
    for (std::size_t m = 0; m < v.metrics.size(); ++m) {
      const auto& a = v.metrics[m];
      ordered_json cell = {{"mean", a.runs ? ordered_json(a.mean) : ordered_json(nullptr)},
                           {"std", a.runs ? ordered_json(a.stddev) : ordered_json(nullptr)},
                           {"runs", a.runs}};
      if (baseline != nullptr && baseline != &v && a.runs && baseline->metrics[m].runs) {
        cell["delta_vs_ce"] = a.mean - baseline->metrics[m].mean;
      }
      metrics[a.metric] = std::move(cell);
    }
    e["metrics"] = std::move(metrics);
    variants.push_back(std::move(e));
  }
  j["variants"] = std::move(variants);

  ordered_json runs = ordered_json::array();
  for (const auto& r : s.runs) {
    ordered_json e;
    e["variant"] = r.variant;
    e["seed"] = r.seed;
    e["ok"] = r.ok;
    if (r.ok) {
      ordered_json metrics;
      for (const auto& name : summary_metric_names()) {
        const auto v = metric_value(r.test, name);
        metrics[name] = v ? ordered_json(*v) : ordered_json(nullptr);
      }
      e["test_metrics"] = std::move(metrics);
    } else {
      e["error"] = r.error;
    }
    runs.push_back(std::move(e));
  }
  j["runs"] = std::move(runs);
  return j.dump(2) + "\n";
}

std::string render_summary_table(const ExperimentSummary& s) {
  std::string out;
  char line[512];
  std::snprintf(line, sizeof(line), "%-20s %6s %16s %16s %16s %16s %16s\n", "Variant", "runs",
                "PCC", "RMSE macro", "Acc(%) std", "Acc(%) macro", "F1 macro");
  out += line;
  for (const auto& v : s.variants) {
    auto fmt = [&](const std::string& metric, double scale) {
      for (const auto& a : v.metrics) {
        if (a.metric != metric) continue;
        if (!a.runs) return std::string("n/a");
        char buf[64];
        std::snprintf(buf, sizeof(buf), "%.4g +- %.2g", a.mean * scale, a.stddev * scale);
        return std::string(buf);
      }
      return std::string("n/a");
    };
    std::snprintf(line, sizeof(line), "%-20s %6zu %16s %16s %16s %16s %16s\n", v.variant.c_str(),
                  v.succeeded, fmt("pcc", 1).c_str(), fmt("rmse_macro", 1).c_str(),
                  fmt("accuracy_standard", 100).c_str(), fmt("accuracy_macro", 100).c_str(),
                  fmt("f1_macro", 1).c_str());
    out += line;
  }
  return out;
}

int cmd_experiment(const RunConfig& config, std::ostream& out) {
  config.validate();
  const auto seeds = config.get_uint_list("experiment.seeds");
  std::vector<Variant> variants;
  for (const auto& v : config.get_string_list("experiment.variants")) variants.push_back(parse_variant(v));
  require(!seeds.empty(), "experiment.seeds must list at least one seed", ErrorKind::kConfig);
  require(variants.size() >= 2, "experiment.variants must list at least two variants",
          ErrorKind::kConfig);
  const TrainConfig base = train_config(config);
  const std::size_t workers = std::max<std::uint64_t>(1, config.get_uint("experiment.workers"));

  // One data split per seed, shared by every variant.
  std::vector<Splits> data;
  const bool from_files = !config.get("input.data").empty();
  for (std::uint64_t seed : seeds) {
    data.push_back(from_files ? load_or_generate_splits(config) : generate_splits(config, seed, nullptr));
  }

  const fs::path dir = run_dir(config, "experiment");
  StagedDirectory stage(dir);

  std::vector<RunRecord> runs(variants.size() * seeds.size());
  std::atomic<std::size_t> next{0};
  auto worker = [&] {
    for (std::size_t job = next++; job < runs.size(); job = next++) {
      const Variant& v = variants[job / seeds.size()];
      const std::size_t si = job % seeds.size();
      RunRecord& rec = runs[job];
      rec.variant = v.name;
      rec.seed = seeds[si];
      try {
        TrainConfig tc = base;
        tc.loss.kind = v.loss.kind;
        tc.loss.sigma = v.loss.sigma;
        tc.loss.gamma = v.loss.gamma;
        tc.seed = seeds[si];
        const TrainReport report = train(data[si].train, nullptr, tc);
        const Prediction p = predict(report.head, data[si].test);
        rec.test = full_report(data[si].test.labels, p.labels, data[si].test.classes);
        const fs::path sub = stage.path() / "runs" / slug(v) / ("seed-" + std::to_string(seeds[si]));
        save_checkpoint({report.head, report.optimizer, report.rng_cursors}, sub / "checkpoint.json");
        write_file_atomic(sub / "report.json", report_to_json(rec.test, data[si].test.class_names));
        rec.ok = true;
      } catch (const std::exception& e) {
        rec.ok = false;
        rec.error = e.what();
      }
    }
  };
  std::vector<std::thread> pool;
  for (std::size_t w = 1; w < std::min(workers, runs.size()); ++w) pool.emplace_back(worker);
  worker();
  for (auto& t : pool) t.join();

  std::vector<std::string> order;
  for (const auto& v : variants) order.push_back(v.name);
  const ExperimentSummary summary = aggregate_runs(runs, order);
  write_file_atomic(stage / "summary.json", summary_to_json(summary));
  const std::string table = render_summary_table(summary);
  write_file_atomic(stage / "summary.txt", table);
  write_file_atomic(stage / "config.echo", config.echo());
  stage.commit();

  out << table;
  int code = 0;
  for (const auto& v : summary.variants) {
    if (v.succeeded == 0) {
      out << "variant " << v.variant << ": every run failed\n";
      code = exit_code(ErrorKind::kExperiment);
    }
  }
  for (const auto& r : runs) {
    if (!r.ok) out << "run " << r.variant << " seed " << r.seed << " failed: " << r.error << "\n";
  }
  return code;
}

// ---------------------------------------------------------------------------

int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  CLI::App app{"Balancing logit variation loss toolkit", "blv"};
  app.require_subcommand(1);

  std::string config_path;
  std::optional<std::uint64_t> seed;
  std::string out_dir, data, checkpoint, run_id;
  std::optional<std::uint64_t> workers;
  std::vector<std::string> overrides;

  app.add_option("--config", config_path, "config file of key = value lines");
  app.add_option("--seed", seed, "master seed (overrides 'seed')");
  app.add_option("--out", out_dir, "output root (overrides 'output.dir')");
  app.add_option("--workers", workers, "parallel runs in 'experiment'");
  app.add_option("--data", data, "dataset directory or .jsonl file (overrides 'input.data')");
  app.add_option("--checkpoint", checkpoint, "checkpoint file (overrides 'input.checkpoint')");
  app.add_option("--run-id", run_id, "output subdirectory name (overrides 'run.id')");
  app.add_option("--set", overrides, "key=value override, repeatable");

  using Command = int (*)(const RunConfig&, std::ostream&);
  const std::vector<std::pair<std::string, Command>> commands = {
      {"generate", cmd_generate}, {"train", cmd_train},         {"evaluate", cmd_evaluate},
      {"project", cmd_project},   {"experiment", cmd_experiment}};
  const std::map<std::string, std::string> help = {
      {"generate", "write a synthetic long-tailed dataset split into train/dev/test"},
      {"train", "train the classifier head and write checkpoint + dev report"},
      {"evaluate", "score a checkpoint on a dataset split"},
      {"project", "t-SNE (or PCA) projection of a checkpoint's logits"},
      {"experiment", "multi-seed comparison of loss variants"}};
  for (const auto& [name, fn] : commands) {
    auto* sub = app.add_subcommand(name, help.at(name));
    sub->fallthrough();
  }

  std::vector<std::string> reversed(args.rbegin(), args.rend());
  try {
    app.parse(reversed);
  } catch (const CLI::CallForHelp& e) {
    out << app.help();
    return 0;
  } catch (const CLI::ParseError& e) {
    err << "error: " << e.what() << "\n";
    return exit_code(ErrorKind::kConfig);
  }

  try {
    RunConfig config = config_path.empty() ? RunConfig() : RunConfig::from_file(config_path);
    for (const auto& kv : overrides) {
      const auto eq = kv.find('=');
      if (eq == std::string::npos) fail(ErrorKind::kConfig, "--set expects key=value, got '" + kv + "'");
      config.set(kv.substr(0, eq), kv.substr(eq + 1));
    }
    if (seed) config.set("seed", std::to_string(*seed));
    if (!out_dir.empty()) config.set("output.dir", out_dir);
    if (workers) config.set("experiment.workers", std::to_string(*workers));
    if (!data.empty()) config.set("input.data", data);
    if (!checkpoint.empty()) config.set("input.checkpoint", checkpoint);
    if (!run_id.empty()) config.set("run.id", run_id);

    for (const auto& [name, fn] : commands) {
      if (app.got_subcommand(name)) return fn(config, out);
    }
  } catch (const Error& e) {
    err << "error: " << e.what() << "\n";
    return exit_code(e.kind());
  } catch (const std::exception& e) {
    err << "error: " << e.what() << "\n";
    return exit_code(ErrorKind::kIo);
  }
  return exit_code(ErrorKind::kConfig);
}

}  // namespace blv::cli
