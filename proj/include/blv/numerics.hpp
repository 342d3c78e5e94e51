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

#include <cstddef>
#include <span>

#include "blv/matrix.hpp"
#include "blv/rng.hpp"

namespace blv {

// Max-shifted softmax. Throws on empty or non-finite input.
Vector softmax(std::span<const double> z);

// log(sum(exp(z))), overflow-safe.
double log_sum_exp(std::span<const double> z);

// z - log_sum_exp(z).
Vector log_softmax(std::span<const double> z);

// `count` i.i.d. N(0, sigma^2) draws. sigma == 0 yields exact zeros without
// consuming the stream.
Vector sample_normal(Rng& rng, double sigma, std::size_t count);

// Projection of mean-centred `points` onto the top `dims` principal axes.
// Each axis is oriented so its largest-magnitude coordinate is positive.
Matrix pca_project(const Matrix& points, std::size_t dims);

}  // namespace blv
