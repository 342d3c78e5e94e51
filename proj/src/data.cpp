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

#include "blv/data.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <sstream>

#include <json.hpp>

#include "blv/error.hpp"
#include "blv/io.hpp"
#include "blv/numerics.hpp"

namespace blv {

using ordered_json = nlohmann::ordered_json;

std::vector<std::string> default_class_names(std::size_t classes) {
  // ICNALE spoken-monologue levels, lowest to highest.
  static const std::vector<std::string> kCefr = {"A2_0", "B1_1", "B1_2", "B2_0", "XX_0"};
  if (classes == kCefr.size()) return kCefr;
  std::vector<std::string> names;
  for (std::size_t k = 0; k < classes; ++k) names.push_back("class" + std::to_string(k));
  return names;
}

void Dataset::validate() const {
  require(classes >= 1, "dataset: class count must be >= 1", ErrorKind::kData);
  require(dim >= 1, "dataset: dim must be >= 1", ErrorKind::kData);
  require(size() >= 1, "dataset: no samples", ErrorKind::kData);
  require(embeddings.size() == labels.size(), "dataset: embeddings/labels length mismatch",
          ErrorKind::kData);
  require(class_names.size() == classes, "dataset: class_names length must equal classes",
          ErrorKind::kData);
  for (std::size_t i = 0; i < size(); ++i) {
    require(labels[i] >= 0 && static_cast<std::size_t>(labels[i]) < classes,
            "dataset: sample " + std::to_string(i) + " label out of range", ErrorKind::kData);
    require(embeddings[i].rows() >= 1,
            "dataset: sample " + std::to_string(i) + " has no tokens", ErrorKind::kData);
    require(embeddings[i].cols() == dim,
            "dataset: sample " + std::to_string(i) + " has wrong dim", ErrorKind::kData);
    require(embeddings[i].all_finite(),
            "dataset: sample " + std::to_string(i) + " has non-finite values", ErrorKind::kData);
  }
}

Dataset subset(const Dataset& d, const std::vector<std::size_t>& indices) {
  Dataset out;
  out.classes = d.classes;
  out.dim = d.dim;
  out.class_names = d.class_names;
  out.embeddings.reserve(indices.size());
  out.labels.reserve(indices.size());
  for (std::size_t i : indices) {
    out.embeddings.push_back(d.embeddings.at(i));
    out.labels.push_back(d.labels.at(i));
  }
  return out;
}

// ---------------------------------------------------------------------------
// JSON-lines codec

std::string serialize_dataset(const Dataset& d) {
  d.validate();
  std::string out;
  ordered_json header;
  header["version"] = 1;
  header["classes"] = d.classes;
  header["dim"] = d.dim;
  header["class_names"] = d.class_names;
  out += header.dump();
  out += '\n';
  for (std::size_t i = 0; i < d.size(); ++i) {
    ordered_json record;
    record["label"] = d.labels[i];
    ordered_json tokens = ordered_json::array();
    const Matrix& e = d.embeddings[i];
    for (std::size_t t = 0; t < e.rows(); ++t) {
      auto r = e.row(t);
      tokens.push_back(std::vector<double>(r.begin(), r.end()));
    }
    record["embedding"] = std::move(tokens);
    out += record.dump();
    out += '\n';
  }
  return out;
}

Dataset parse_dataset(const std::string& text) {
  std::istringstream in(text);
  std::string line;
  std::size_t line_no = 0;
  auto line_error = [&](const std::string& what) {
    fail(ErrorKind::kData, "line " + std::to_string(line_no) + ": " + what);
  };

  Dataset d;
  bool have_header = false;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty()) continue;
    ordered_json j;
    try {
      j = ordered_json::parse(line);
    } catch (const nlohmann::json::exception& e) {
      line_error(std::string("malformed JSON: ") + e.what());
    }
    try {
      if (!have_header) {
        if (j.at("version").get<int>() != 1) line_error("unsupported version");
        const auto classes = j.at("classes").get<std::int64_t>();
        const auto dim = j.at("dim").get<std::int64_t>();
        if (classes < 1 || dim < 1) line_error("classes and dim must be >= 1");
        d.classes = static_cast<std::size_t>(classes);
        d.dim = static_cast<std::size_t>(dim);
        d.class_names = j.contains("class_names")
                            ? j.at("class_names").get<std::vector<std::string>>()
                            : default_class_names(d.classes);
        if (d.class_names.size() != d.classes) line_error("class_names length must equal classes");
        have_header = true;
        continue;
      }
      const auto label = j.at("label").get<std::int64_t>();
      const std::size_t sample = d.size();
      if (label < 0 || static_cast<std::size_t>(label) >= d.classes) {
        line_error("sample " + std::to_string(sample) + ": label out of range (" +
                   std::to_string(label) + " not in [0, " + std::to_string(d.classes) + "))");
      }
      const auto& tokens = j.at("embedding");
      if (!tokens.is_array() || tokens.empty()) line_error("embedding must be a non-empty list of token vectors");
      Matrix e(tokens.size(), d.dim);
      for (std::size_t t = 0; t < tokens.size(); ++t) {
        const auto& tok = tokens[t];
        if (!tok.is_array() || tok.size() != d.dim) line_error("token vector length must equal dim");
        for (std::size_t c = 0; c < d.dim; ++c) {
          if (!tok[c].is_number()) line_error("embedding values must be numbers");
          e(t, c) = tok[c].get<double>();
          if (!std::isfinite(e(t, c))) line_error("non-finite embedding value");
        }
      }
      d.embeddings.push_back(std::move(e));
      d.labels.push_back(static_cast<int>(label));
    } catch (const nlohmann::json::exception& e) {
      line_error(std::string("malformed record: ") + e.what());
    }
  }
  if (!have_header) fail(ErrorKind::kData, "dataset file has no header line");
  d.validate();
  return d;
}

void save_dataset(const Dataset& d, const std::filesystem::path& path) {
  write_file_atomic(path, serialize_dataset(d));
}

Dataset load_dataset(const std::filesystem::path& path) {
  return parse_dataset(read_file(path));
}

// ---------------------------------------------------------------------------
// Class statistics

ClassStats compute_class_stats(const std::vector<int>& labels, std::size_t classes,
                               ZeroCountPolicy policy) {
  require(classes >= 2, "compute_class_stats: need at least 2 classes", ErrorKind::kData);
  ClassStats s;
  s.counts.assign(classes, 0);
  for (int y : labels) {
    require(y >= 0 && static_cast<std::size_t>(y) < classes,
            "compute_class_stats: label " + std::to_string(y) + " out of range", ErrorKind::kData);
    ++s.counts[static_cast<std::size_t>(y)];
  }
  for (std::size_t k = 0; k < classes; ++k) {
    if (s.counts[k] > 0) continue;
    if (policy == ZeroCountPolicy::kClamp) {
      s.counts[k] = 1;
    } else {
      fail(ErrorKind::kData, "class " + std::to_string(k) + " has zero samples");
    }
  }
  s.total = std::accumulate(s.counts.begin(), s.counts.end(), std::int64_t{0});

  const double n = static_cast<double>(s.total);
  std::vector<double> log_freq(classes);
  for (std::size_t k = 0; k < classes; ++k) {
    log_freq[k] = std::log(n / static_cast<double>(s.counts[k]));
  }
  const double denom = *std::max_element(log_freq.begin(), log_freq.end());
  require(denom > 0.0, "compute_class_stats: degenerate class counts", ErrorKind::kData);
  s.alpha.resize(classes);
  for (std::size_t k = 0; k < classes; ++k) s.alpha[k] = log_freq[k] / denom;
  return s;
}

// ---------------------------------------------------------------------------
// Synthetic long-tailed data

std::vector<double> discretized_gaussian_priors(std::size_t classes, double mean, double std) {
  require(classes >= 2, "discretized_gaussian_priors: need at least 2 classes");
  require(std > 0.0, "discretized_gaussian_priors: std must be > 0");
  auto cdf = [&](double x) { return 0.5 * std::erfc(-(x - mean) / (std * std::sqrt(2.0))); };
  std::vector<double> p(classes);
  double total = 0.0;
  for (std::size_t k = 0; k < classes; ++k) {
    const double c = static_cast<double>(k);
    p[k] = cdf(c + 0.5) - cdf(c - 0.5);
    total += p[k];
  }
  require(total > 0.0, "discretized_gaussian_priors: no mass over the class range");
  for (double& v : p) v /= total;
  return p;
}

std::vector<std::size_t> allocate_counts(const std::vector<double>& priors, std::size_t total) {
  std::vector<std::size_t> counts(priors.size());
  std::vector<std::pair<double, std::size_t>> remainders;
  std::size_t assigned = 0;
  for (std::size_t k = 0; k < priors.size(); ++k) {
    const double exact = priors[k] * static_cast<double>(total);
    // Guard against 0.3 * 100 = 29.999999999999996.
    const double floored = std::floor(exact + 1e-9);
    counts[k] = static_cast<std::size_t>(floored);
    remainders.emplace_back(exact - floored, k);
    assigned += counts[k];
  }
  std::stable_sort(remainders.begin(), remainders.end(),
                   [](const auto& a, const auto& b) { return a.first > b.first; });
  for (std::size_t r = 0; assigned < total; ++r, ++assigned) {
    ++counts[remainders[r % remainders.size()].second];
  }
  return counts;
}

std::vector<double> GeneratorSpec::resolved_priors() const {
  if (!priors.empty()) return priors;
  return discretized_gaussian_priors(classes, prior_mean, prior_std);
}

void GeneratorSpec::validate() const {
  require(classes >= 2, "generator: classes must be >= 2", ErrorKind::kConfig);
  require(samples >= 1, "generator: samples must be >= 1", ErrorKind::kConfig);
  require(dim >= classes, "generator: dim must be >= classes (one simplex axis per class)",
          ErrorKind::kConfig);
  require(cluster_separation > 0.0, "generator: cluster_separation must be > 0", ErrorKind::kConfig);
  require(cluster_noise_std >= 0.0, "generator: cluster_noise_std must be >= 0", ErrorKind::kConfig);
  require(min_tokens >= 1 && max_tokens >= min_tokens,
          "generator: need 1 <= min_tokens <= max_tokens", ErrorKind::kConfig);
  if (!priors.empty()) {
    require(priors.size() == classes, "generator: priors length must equal classes",
            ErrorKind::kConfig);
    double sum = 0.0;
    for (double p : priors) {
      require(p >= 0.0, "generator: priors must be non-negative", ErrorKind::kConfig);
      sum += p;
    }
    require(std::abs(sum - 1.0) <= 1e-9, "generator: priors must sum to 1", ErrorKind::kConfig);
  } else {
    require(prior_std > 0.0, "generator: prior_std must be > 0", ErrorKind::kConfig);
  }
}

Dataset generate_longtail(const GeneratorSpec& spec) {
  spec.validate();
  const auto counts = allocate_counts(spec.resolved_priors(), spec.samples);
  for (std::size_t k = 0; k < counts.size(); ++k) {
    if (counts[k] == 0) {
      fail(ErrorKind::kConfig, "generator: class " + std::to_string(k) +
                                   " was allocated 0 samples; increase the sample count");
    }
  }

  Rng root(spec.seed);
  Rng noise = root.child("data.noise");
  Rng order = root.child("data.order");

  // Vertices of a regular simplex: scaled basis vectors, pairwise distance = separation.
  const double scale = spec.cluster_separation / std::sqrt(2.0);

  Dataset d;
  d.classes = spec.classes;
  d.dim = spec.dim;
  d.class_names = default_class_names(spec.classes);
  for (std::size_t k = 0; k < spec.classes; ++k) {
    for (std::size_t i = 0; i < counts[k]; ++i) {
      const std::size_t span = spec.max_tokens - spec.min_tokens + 1;
      const std::size_t tokens = spec.min_tokens + static_cast<std::size_t>(noise.below(span));
      Matrix e(tokens, spec.dim);
      for (std::size_t t = 0; t < tokens; ++t) {
        for (std::size_t c = 0; c < spec.dim; ++c) {
          const double center = c == k ? scale : 0.0;
          e(t, c) = center + (spec.cluster_noise_std > 0.0 ? spec.cluster_noise_std * noise.normal() : 0.0);
        }
      }
      d.embeddings.push_back(std::move(e));
      d.labels.push_back(static_cast<int>(k));
    }
  }

  // Fisher-Yates so class blocks are interleaved.
  std::vector<std::size_t> perm(d.size());
  std::iota(perm.begin(), perm.end(), 0);
  for (std::size_t i = perm.size(); i > 1; --i) {
    std::swap(perm[i - 1], perm[order.below(i)]);
  }
  return subset(d, perm);
}

// ---------------------------------------------------------------------------
// Stratified split

SplitResult split_dataset(const Dataset& d, std::array<double, 3> fractions, std::uint64_t seed) {
  double sum = 0.0;
  for (double f : fractions) {
    require(f > 0.0, "split: fractions must be positive", ErrorKind::kConfig);
    sum += f;
  }
  require(std::abs(sum - 1.0) <= 1e-9, "split: fractions must sum to 1", ErrorKind::kConfig);

  SplitResult result;
  Rng rng = Rng(seed).child("data.split");
  const std::vector<double> priors(fractions.begin(), fractions.end());

  for (std::size_t k = 0; k < d.classes; ++k) {
    std::vector<std::size_t> members;
    for (std::size_t i = 0; i < d.size(); ++i) {
      if (static_cast<std::size_t>(d.labels[i]) == k) members.push_back(i);
    }
    if (members.empty()) continue;
    for (std::size_t i = members.size(); i > 1; --i) {
      std::swap(members[i - 1], members[rng.below(i)]);
    }

    std::vector<std::size_t> sizes;
    if (members.size() < fractions.size()) {
      result.warnings.push_back("class " + std::to_string(k) + " has " +
                                std::to_string(members.size()) +
                                " samples, fewer than the 3 partitions; assigned train-first");
      sizes.assign(3, 0);
      for (std::size_t i = 0; i < members.size(); ++i) ++sizes[i];
    } else {
      sizes = allocate_counts(priors, members.size());
    }

    std::size_t cursor = 0;
    for (std::size_t part = 0; part < 3; ++part) {
      for (std::size_t n = 0; n < sizes[part]; ++n) result.indices[part].push_back(members[cursor++]);
    }
  }

  for (auto& idx : result.indices) std::sort(idx.begin(), idx.end());
  result.train = subset(d, result.indices[0]);
  result.dev = subset(d, result.indices[1]);
  result.test = subset(d, result.indices[2]);
  return result;
}

}  // namespace blv
