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

#include "concept_probe/tensor.hpp"

#include <algorithm>
#include <numeric>
#include <string>

#include "concept_probe/errors.hpp"

namespace concept_probe {
namespace {

std::size_t checked_volume(const std::vector<std::size_t>& dims) {
  if (dims.empty() || dims.size() > 3) {
    throw UsageError("tensor rank must be 1..3, got " + std::to_string(dims.size()));
  }
  std::size_t volume = 1;
  for (std::size_t extent : dims) {
    if (extent == 0) throw UsageError("tensor extents must be >= 1");
    volume *= extent;
  }
  return volume;
}

}  // namespace

Tensor::Tensor(std::vector<std::size_t> dims)
    : dims_(std::move(dims)), data_(checked_volume(dims_), 0.0f) {}

Tensor::Tensor(std::vector<std::size_t> dims, std::vector<float> data)
    : dims_(std::move(dims)), data_(std::move(data)) {
  if (checked_volume(dims_) != data_.size()) {
    throw UsageError("tensor payload length " + std::to_string(data_.size()) +
                     " does not match extents");
  }
}

Tensor Tensor::filled(std::vector<std::size_t> dims, float value) {
  Tensor t(std::move(dims));
  std::fill(t.data_.begin(), t.data_.end(), value);
  return t;
}

std::span<const float> Tensor::row(std::size_t i) const {
  return std::span<const float>(data_).subspan(i * dims_[1], dims_[1]);
}

std::span<float> Tensor::row(std::size_t i) {
  return std::span<float>(data_).subspan(i * dims_[1], dims_[1]);
}

}  // namespace concept_probe
