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
#include <string_view>

namespace blv {

// Counter-based generator, "splitmix64-ctr/v1".
//
// Draw i of a stream keyed by `seed` is splitmix64_finalize(seed + (i + 1) * 0x9E3779B97F4A7C15).
// The stream is a pure function of (seed, counter), so the full state is two
// integers and the sequence is identical on every platform. Normals use the
// cosine branch of Box-Muller and consume two draws each; uniforms map the top
// 53 bits to the open interval (0, 1).
class Rng {
 public:
  static constexpr std::string_view kAlgorithm = "splitmix64-ctr/v1";

  explicit Rng(std::uint64_t seed, std::uint64_t counter = 0) noexcept
      : seed_(seed), counter_(counter) {}

  std::uint64_t next_u64() noexcept;
  double uniform() noexcept;  // in (0, 1)
  double normal() noexcept;   // N(0, 1)
  // Uniform integer in [0, bound); bound > 0.
  std::uint64_t below(std::uint64_t bound) noexcept;

  // Independent stream for a named purpose. Does not advance this generator.
  Rng child(std::string_view purpose) const noexcept;
  Rng child(std::uint64_t index) const noexcept;

  std::uint64_t seed() const noexcept { return seed_; }
  std::uint64_t counter() const noexcept { return counter_; }

  friend bool operator==(const Rng&, const Rng&) = default;

 private:
  std::uint64_t seed_;
  std::uint64_t counter_;
};

std::uint64_t mix64(std::uint64_t x) noexcept;

}  // namespace blv
