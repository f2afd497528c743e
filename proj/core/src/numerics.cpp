/*
 * Copyright (c) 2026, The concept-probe Authors.
 *
 * Licensed under the Apache License, Version 2.0 (the "License");
 * you may not use this file except in compliance with the License.
 * You may obtain a copy of the License at
 *
 *     http://www.apache.org/licenses/LICENSE-2.0
 *
 * Unless required by applicable law or agreed to in writing, software
 * distributed under the License is distributed on an "AS IS" BASIS,
 * WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
 * See the License for the specific language governing permissions and
 * limitations under the License.
 */

#include "concept_probe/numerics.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <string>

#include "concept_probe/errors.hpp"

namespace concept_probe {

Tensor gap(const Tensor& maps) {
  if (maps.rank() != 3) {
    throw UsageError("gap expects a rank-3 tensor, got rank " + std::to_string(maps.rank()));
  }
  const std::size_t h = maps.dim(0), w = maps.dim(1), d = maps.dim(2);
  std::vector<double> acc(d, 0.0);
  const auto v = maps.values();
  for (std::size_t cell = 0; cell < h * w; ++cell) {
    for (std::size_t k = 0; k < d; ++k) acc[k] += v[cell * d + k];
  }
  Tensor out({d});
  const double inv = 1.0 / static_cast<double>(h * w);
  for (std::size_t k = 0; k < d; ++k) out[k] = static_cast<float>(acc[k] * inv);
  return out;
}

double dot(std::span<const float> a, std::span<const float> b) {
  if (a.size() != b.size()) throw UsageError("dot: length mismatch");
  double acc = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) acc += static_cast<double>(a[i]) * b[i];
  return acc;
}

namespace {

template <typename T>
std::optional<double> cosine_impl(std::span<const T> a, std::span<const T> b) {
  if (a.size() != b.size()) {
    throw UsageError("cosine: length mismatch (" + std::to_string(a.size()) + " vs " +
                     std::to_string(b.size()) + ")");
  }
  double ab = 0.0, aa = 0.0, bb = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    const double x = a[i], y = b[i];
    ab += x * y;
    aa += x * x;
    bb += y * y;
  }
  const double na = std::sqrt(aa), nb = std::sqrt(bb);
  if (na < kCosineNormFloor || nb < kCosineNormFloor) return std::nullopt;
  return std::clamp(ab / (na * nb), -1.0, 1.0);
}

template <typename T>
std::vector<std::size_t> rank_impl(std::span<const T> scores, RankKey key) {
  for (T s : scores) {
    if (std::isnan(s)) throw NumericError("rank_desc: NaN score");
  }
  std::vector<std::size_t> order(scores.size());
  std::iota(order.begin(), order.end(), std::size_t{0});
  auto value = [&](std::size_t i) -> double {
    const double s = scores[i];
    return key == RankKey::kAbsolute ? std::fabs(s) : s;
  };
  std::stable_sort(order.begin(), order.end(),
                   [&](std::size_t x, std::size_t y) { return value(x) > value(y); });
  return order;
}

}  // namespace

std::optional<double> cosine(std::span<const double> a, std::span<const double> b) {
  return cosine_impl(a, b);
}

std::optional<double> cosine(std::span<const float> a, std::span<const float> b) {
  return cosine_impl(a, b);
}

std::vector<std::size_t> rank_desc(std::span<const double> scores, RankKey key) {
  return rank_impl(scores, key);
}

std::vector<std::size_t> rank_desc(std::span<const float> scores, RankKey key) {
  return rank_impl(scores, key);
}

}  // namespace concept_probe
