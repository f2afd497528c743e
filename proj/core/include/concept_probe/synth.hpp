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
#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "concept_probe/dataset.hpp"

namespace concept_probe {

/// Axis-aligned block of feature-grid cells.
struct CellRect {
  std::size_t row = 0;
  std::size_t col = 0;
  std::size_t rows = 1;
  std::size_t cols = 1;
};

struct SynthSpec {
  std::size_t num_classes = 8;
  std::size_t num_concepts = 12;
  std::size_t depth = 16;
  std::size_t height = 7;
  std::size_t width = 7;
  std::size_t image_rows = 84;
  std::size_t image_cols = 84;
  std::size_t samples_per_class = 40;
  double train_fraction = 0.75;
  double noise_sigma = 0.1;
  double amplitude = 2.0;
  std::size_t rect_rows = 2;
  std::size_t rect_cols = 2;
  std::size_t concepts_per_class = 3;
  /// Optional explicit class -> concept incidence, num_concepts x num_classes of 0/1.
  std::optional<std::vector<std::vector<int>>> incidence;
  /// Optional explicit rectangles, one per concept.
  std::optional<std::vector<CellRect>> rects;
  /// (a, b): whenever a is planted, b's direction is also injected in b's
  /// rectangle without labelling b present.
  std::vector<std::pair<std::size_t, std::size_t>> correlation;
  /// Concepts written without a part mapping.
  std::vector<std::size_t> unmapped_concepts;
  std::uint64_t seed = 0;
};

SynthSpec parse_synth_spec(const std::string& json_text);
std::string synth_spec_to_json(const SynthSpec& spec);

struct SynthOutput {
  DatasetManifest manifest;
  std::vector<FeatureRecord> records;
  std::vector<std::vector<double>> directions;  // planted v_j, unit length
  std::vector<CellRect> rects;
  std::vector<PixelCoord> part_points;   // centre of each rectangle in image space
  std::vector<std::vector<int>> incidence;  // L x K
  std::string oracle_json;
};

inline constexpr double kMaxPlantedCosine = 0.2;

/// Builds a planted-concept dataset. Directions are orthonormalized when
/// num_concepts <= depth and rejection-sampled otherwise.
SynthOutput generate(const SynthSpec& spec);

/// Writes the dataset directory plus oracle.json.
void write_synth(const std::filesystem::path& root, const SynthOutput& output);

/// Image-space pixel at the centre of a cell rectangle.
PixelCoord rect_centre(const CellRect& rect, const SynthSpec& spec);

}  // namespace concept_probe
