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

#include <gtest/gtest.h>

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <numeric>
#include <random>
#include <set>

#include "blv/error.hpp"
#include "blv/io.hpp"
#include "blv/model.hpp"

namespace blv {
namespace {

namespace fs = std::filesystem;

fs::path temp_dir(const std::string& name) {
  const fs::path p = fs::temp_directory_path() / ("blv_data_test_" + name);
  fs::remove_all(p);
  fs::create_directories(p);
  return p;
}

std::vector<int> labels_from_counts(const std::vector<int>& counts) {
  std::vector<int> labels;
  for (std::size_t k = 0; k < counts.size(); ++k) labels.insert(labels.end(), counts[k], static_cast<int>(k));
  return labels;
}

TEST(ClassStats, UniformCountsGiveUnitWeights) {
  const ClassStats s = compute_class_stats(labels_from_counts({25, 25, 25, 25}), 4);
  EXPECT_EQ(s.total, 100);
  for (double a : s.alpha) EXPECT_DOUBLE_EQ(a, 1.0);
}

TEST(ClassStats, ThreeClassExample) {
  const ClassStats s = compute_class_stats(labels_from_counts({50, 30, 20}), 3);
  EXPECT_EQ(s.counts, (std::vector<std::int64_t>{50, 30, 20}));
  EXPECT_NEAR(s.alpha[0], 0.4307, 5e-5);
  EXPECT_NEAR(s.alpha[1], 0.7481, 5e-5);
  EXPECT_EQ(s.alpha[2], 1.0);
}

TEST(ClassStats, ExtremeImbalance) {
  const ClassStats s = compute_class_stats(labels_from_counts({99, 1}), 2);
  EXPECT_NEAR(s.alpha[0], 0.002182, 5e-7);
  EXPECT_EQ(s.alpha[1], 1.0);
}

TEST(ClassStats, ZeroCountIsAnErrorUnlessClamped) {
  const auto labels = labels_from_counts({10, 0, 5});
  try {
    compute_class_stats(labels, 3);
    FAIL();
  } catch (const Error& e) {
    EXPECT_NE(std::string(e.what()).find("class 1 has zero samples"), std::string::npos);
  }
  const ClassStats s = compute_class_stats(labels, 3, ZeroCountPolicy::kClamp);
  EXPECT_EQ(s.counts[1], 1);
  EXPECT_EQ(s.total, 16);
  EXPECT_EQ(s.alpha[1], 1.0);
}

TEST(ClassStats, SingleClassRejected) {
  EXPECT_THROW(compute_class_stats({0, 0, 0}, 1), Error);
}

TEST(ClassStats, LabelOutOfRange) { EXPECT_THROW(compute_class_stats({0, 3}, 3), Error); }

TEST(ClassStats, PermutationInvariantAndMonotone) {
  std::mt19937_64 gen(17);
  std::uniform_int_distribution<int> count(1, 300);
  for (int trial = 0; trial < 50; ++trial) {
    std::vector<int> counts(2 + trial % 7);
    for (int& c : counts) c = count(gen);
    auto labels = labels_from_counts(counts);
    const ClassStats a = compute_class_stats(labels, counts.size());
    std::shuffle(labels.begin(), labels.end(), gen);
    const ClassStats b = compute_class_stats(labels, counts.size());
    EXPECT_EQ(a.counts, b.counts);
    EXPECT_EQ(a.alpha, b.alpha);
    const auto rarest = std::min_element(counts.begin(), counts.end()) - counts.begin();
    EXPECT_EQ(a.alpha[static_cast<std::size_t>(rarest)], 1.0);
    for (std::size_t i = 0; i < counts.size(); ++i) {
      EXPECT_GT(a.alpha[i], 0.0);
      EXPECT_LE(a.alpha[i], 1.0);
      for (std::size_t j = 0; j < counts.size(); ++j) {
        if (counts[i] <= counts[j]) EXPECT_GE(a.alpha[i], a.alpha[j]);
      }
    }
  }
}

TEST(Generator, UniformPriorsSplitEvenly) {
  GeneratorSpec g;
  g.classes = 4;
  g.samples = 100;
  g.dim = 4;
  g.priors = {0.25, 0.25, 0.25, 0.25};
  const Dataset d = generate_longtail(g);
  const ClassStats s = compute_class_stats(d.labels, 4);
  EXPECT_EQ(s.counts, (std::vector<std::int64_t>{25, 25, 25, 25}));
}

TEST(Generator, ExplicitPriorsExact) {
  EXPECT_EQ(allocate_counts({0.5, 0.3, 0.2}, 100), (std::vector<std::size_t>{50, 30, 20}));
  GeneratorSpec g;
  g.classes = 3;
  g.samples = 100;
  g.dim = 3;
  g.priors = {0.5, 0.3, 0.2};
  const ClassStats s = compute_class_stats(generate_longtail(g).labels, 3);
  EXPECT_EQ(s.counts, (std::vector<std::int64_t>{50, 30, 20}));
}

TEST(Generator, LargestRemainderAllocation) {
  EXPECT_EQ(allocate_counts({1.0 / 3, 1.0 / 3, 1.0 / 3}, 10), (std::vector<std::size_t>{4, 3, 3}));
  EXPECT_EQ(allocate_counts({0.05, 0.15, 0.8}, 7), (std::vector<std::size_t>{0, 1, 6}));
  const auto c = allocate_counts({0.1, 0.2, 0.3, 0.4}, 1001);
  EXPECT_EQ(std::accumulate(c.begin(), c.end(), std::size_t{0}), 1001u);
}

TEST(Generator, DiscretizedGaussianIsUnimodal) {
  // Independent evaluation of the bin masses with std::erf.
  const auto p = discretized_gaussian_priors(5, 2.0, 1.0);
  auto phi = [](double x) { return 0.5 * (1.0 + std::erf((x - 2.0) / std::sqrt(2.0))); };
  double total = 0.0;
  std::vector<double> mass(5);
  for (int k = 0; k < 5; ++k) total += mass[k] = phi(k + 0.5) - phi(k - 0.5);
  for (int k = 0; k < 5; ++k) EXPECT_NEAR(p[k], mass[k] / total, 1e-14);

  GeneratorSpec g;
  g.classes = 5;
  g.samples = 500;
  g.dim = 5;
  g.prior_mean = 2.0;
  g.prior_std = 1.0;
  const ClassStats s = compute_class_stats(generate_longtail(g).labels, 5);
  EXPECT_EQ(std::max_element(s.counts.begin(), s.counts.end()) - s.counts.begin(), 2);
  EXPECT_LE(s.counts[0], s.counts[1]);
  EXPECT_LE(s.counts[1], s.counts[2]);
  EXPECT_GE(s.counts[2], s.counts[3]);
  EXPECT_GE(s.counts[3], s.counts[4]);
}

TEST(Generator, DefaultProfileRatioNearTen) {
  const GeneratorSpec g;
  const auto c = allocate_counts(g.resolved_priors(), g.samples);
  const double ratio = static_cast<double>(*std::max_element(c.begin(), c.end())) /
                       static_cast<double>(*std::min_element(c.begin(), c.end()));
  EXPECT_GT(ratio, 9.0);
  EXPECT_LT(ratio, 11.0);
}

TEST(Generator, ZeroAllocationRejected) {
  GeneratorSpec g;
  g.classes = 3;
  g.samples = 5;
  g.dim = 3;
  g.priors = {0.9, 0.09, 0.01};
  try {
    generate_longtail(g);
    FAIL();
  } catch (const Error& e) {
    EXPECT_NE(std::string(e.what()).find("increase the sample count"), std::string::npos);
  }
}

TEST(Generator, DeterministicInSeed) {
  GeneratorSpec g;
  g.samples = 200;
  g.max_tokens = 3;
  EXPECT_EQ(generate_longtail(g), generate_longtail(g));
  GeneratorSpec h = g;
  h.seed = 1;
  EXPECT_NE(generate_longtail(g), generate_longtail(h));
}

TEST(Generator, NoiselessClustersAreLinearlySeparable) {
  GeneratorSpec g;
  g.samples = 300;
  g.cluster_noise_std = 1e-9;
  const Dataset d = generate_longtail(g);
  // Linear rule with W = I: the class axis carries the largest coordinate.
  ClassifierHead head = ClassifierHead::zeros(g.dim, g.classes);
  for (std::size_t k = 0; k < g.classes; ++k) head.weight(k, k) = 1.0;
  const Prediction p = predict(head, d);
  EXPECT_EQ(p.labels, d.labels);
}

TEST(Generator, TokenSequencesRespectBounds) {
  GeneratorSpec g;
  g.samples = 100;
  g.min_tokens = 2;
  g.max_tokens = 5;
  const Dataset d = generate_longtail(g);
  std::set<std::size_t> seen;
  for (std::size_t i = 0; i < d.size(); ++i) {
    EXPECT_GE(d.sequence_length(i), 2u);
    EXPECT_LE(d.sequence_length(i), 5u);
    seen.insert(d.sequence_length(i));
  }
  EXPECT_GT(seen.size(), 1u);
}

TEST(Split, StratifiedExactSizes) {
  GeneratorSpec g;
  g.classes = 2;
  g.samples = 100;
  g.dim = 2;
  g.priors = {0.5, 0.5};
  const Dataset d = generate_longtail(g);
  const SplitResult s = split_dataset(d, {0.8, 0.1, 0.1}, 3);
  EXPECT_EQ(s.train.size(), 80u);
  EXPECT_EQ(s.dev.size(), 10u);
  EXPECT_EQ(s.test.size(), 10u);
  for (const Dataset* part : {&s.train, &s.dev, &s.test}) {
    const auto ones = std::count(part->labels.begin(), part->labels.end(), 1);
    EXPECT_EQ(static_cast<std::size_t>(ones) * 2, part->size());
  }
  EXPECT_TRUE(s.warnings.empty());
}

TEST(Split, DeterministicAndExhaustive) {
  GeneratorSpec g;
  g.samples = 333;
  const Dataset d = generate_longtail(g);
  const SplitResult a = split_dataset(d, {0.7, 0.2, 0.1}, 11);
  const SplitResult b = split_dataset(d, {0.7, 0.2, 0.1}, 11);
  EXPECT_EQ(a.indices, b.indices);
  std::vector<std::size_t> all;
  for (const auto& idx : a.indices) all.insert(all.end(), idx.begin(), idx.end());
  std::sort(all.begin(), all.end());
  std::vector<std::size_t> expected(d.size());
  std::iota(expected.begin(), expected.end(), 0);
  EXPECT_EQ(all, expected);
  const SplitResult c = split_dataset(d, {0.7, 0.2, 0.1}, 12);
  EXPECT_NE(a.indices, c.indices);
}

TEST(Split, TinyClassWarnsAndGoesToTrainFirst) {
  Dataset d;
  d.classes = 2;
  d.dim = 1;
  d.class_names = default_class_names(2);
  for (int i = 0; i < 12; ++i) {
    d.embeddings.push_back(Matrix(1, 1, static_cast<double>(i)));
    d.labels.push_back(i == 0 ? 1 : 0);
  }
  const SplitResult s = split_dataset(d, {0.5, 0.25, 0.25}, 0);
  ASSERT_EQ(s.warnings.size(), 1u);
  EXPECT_EQ(std::count(s.train.labels.begin(), s.train.labels.end(), 1), 1);
}

TEST(Split, BadFractionsRejected) {
  GeneratorSpec g;
  const Dataset d = generate_longtail(g);
  EXPECT_THROW(split_dataset(d, {0.8, 0.1, 0.2}, 0), Error);
  EXPECT_THROW(split_dataset(d, {1.0, 0.0, 0.0}, 0), Error);
}

TEST(DatasetFile, RoundTripIsByteExact) {
  GeneratorSpec g;
  g.samples = 50;
  g.max_tokens = 3;
  const Dataset d = generate_longtail(g);
  const fs::path dir = temp_dir("roundtrip");
  save_dataset(d, dir / "d.jsonl");
  const Dataset back = load_dataset(dir / "d.jsonl");
  EXPECT_EQ(back, d);
  save_dataset(back, dir / "e.jsonl");
  EXPECT_EQ(read_file(dir / "d.jsonl"), read_file(dir / "e.jsonl"));
}

TEST(DatasetFile, SmallFileParses) {
  const std::string text =
      "{\"version\":1,\"classes\":5,\"dim\":2,\"class_names\":[\"a\",\"b\",\"c\",\"d\",\"e\"]}\n"
      "{\"label\":0,\"embedding\":[[1,2]]}\n"
      "{\"label\":4,\"embedding\":[[0.5,0.25],[1,1]]}\n"
      "{\"label\":2,\"embedding\":[[-1,3e-3]]}\n";
  const Dataset d = parse_dataset(text);
  EXPECT_EQ(d.size(), 3u);
  EXPECT_EQ(d.classes, 5u);
  EXPECT_EQ(d.sequence_length(1), 2u);
  EXPECT_EQ(d.labels, (std::vector<int>{0, 4, 2}));
}

TEST(DatasetFile, LabelOutOfRangeNamesSample) {
  const std::string text =
      "{\"version\":1,\"classes\":5,\"dim\":1}\n"
      "{\"label\":1,\"embedding\":[[1]]}\n"
      "{\"label\":7,\"embedding\":[[1]]}\n";
  try {
    parse_dataset(text);
    FAIL();
  } catch (const Error& e) {
    const std::string msg = e.what();
    EXPECT_NE(msg.find("label out of range"), std::string::npos);
    EXPECT_NE(msg.find("sample 1"), std::string::npos);
    EXPECT_NE(msg.find("line 3"), std::string::npos);
    EXPECT_EQ(e.kind(), ErrorKind::kData);
  }
}

TEST(DatasetFile, MalformedRecordReportsLine) {
  const std::string text =
      "{\"version\":1,\"classes\":2,\"dim\":2}\n"
      "{\"label\":1,\"embedding\":[[1,2]]}\n"
      "{\"label\":1,\"embedding\":[[1]]}\n";
  try {
    parse_dataset(text);
    FAIL();
  } catch (const Error& e) {
    EXPECT_NE(std::string(e.what()).find("line 3"), std::string::npos);
  }
  EXPECT_THROW(parse_dataset("{\"version\":1,\"classes\":2,\"dim\":2}\n{not json\n"), Error);
  EXPECT_THROW(parse_dataset(""), Error);
}

TEST(DatasetFile, MissingFileIsIoError) {
  try {
    load_dataset("/nonexistent/blv/data.jsonl");
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.kind(), ErrorKind::kIo);
  }
}

}  // namespace
}  // namespace blv
