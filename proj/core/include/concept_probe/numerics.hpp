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

#pragma once

#include <cstddef>
#include <optional>
#include <span>
#include <vector>

#include "concept_probe/tensor.hpp"

namespace concept_probe {

/// Cosine similarity; nullopt when either norm falls below this.
inline constexpr double kCosineNormFloor = 1e-12;

/// Global average pooling of an H x W x d map into a d-vector.
Tensor gap(const Tensor& maps);

double dot(std::span<const float> a, std::span<const float> b);

/// a.b / (|a| |b|), or nullopt when either norm is below kCosineNormFloor.
std::optional<double> cosine(std::span<const double> a, std::span<const double> b);
std::optional<double> cosine(std::span<const float> a, std::span<const float> b);

enum class RankKey { kSigned, kAbsolute };

/// Indices sorted by descending key; ties keep ascending index order.
std::vector<std::size_t> rank_desc(std::span<const double> scores, RankKey key);
std::vector<std::size_t> rank_desc(std::span<const float> scores, RankKey key);

}  // namespace concept_probe
