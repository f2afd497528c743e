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

#include <array>
#include <cstddef>
#include <span>
#include <string>
#include <vector>

#include "concept_probe/image.hpp"
#include "concept_probe/tensor.hpp"

namespace concept_probe {

/// Concept activation maps for every bank row: out(:,:,j) = (1/d) sum_k C(j,k) E(:,:,k).
/// `pre_gap` is H x W x d, `cavs` is L x d; the result is H x W x L.
Tensor coam(const Tensor& pre_gap, const Tensor& cavs);

/// The H x W map of a single concept direction.
Tensor coam_slice(const Tensor& pre_gap, std::span<const float> cav);

/// Bilinear resize with half-pixel centres. Output pixel (r, c) samples the
/// source at ((r + 0.5) H / rows - 0.5, (c + 0.5) W / cols - 0.5), clamped
/// to the source extent.
Tensor upsample(const Tensor& raw, std::size_t rows, std::size_t cols);

struct ConceptActivationMap {
  std::string image_id;
  std::size_t concept_index = 0;
  Tensor raw;        // H x W
  Tensor upsampled;  // image rows x image cols
};

/// Per-map min-max scaling to [0, 1]. A constant map scales to all zeros
/// and sets `degenerate`.
std::vector<double> normalize_minmax(const Tensor& map, bool& degenerate);

/// Piecewise-linear jet colour in [0, 1]^3 for t in [0, 1].
std::array<double, 3> jet(double t);

enum class RenderMode { kColoured, kBinary };

struct RenderOptions {
  RenderMode mode = RenderMode::kColoured;
  double beta = 0.4;       // heatmap opacity in coloured mode
  double threshold = 0.5;  // mask cut on the normalized map in binary mode
};

struct RenderResult {
  RgbImage image;
  bool degenerate = false;
};

RenderResult render(const Tensor& upsampled, const RgbImage& image, const RenderOptions& options);

}  // namespace concept_probe
