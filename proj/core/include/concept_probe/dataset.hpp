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
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "concept_probe/tensor.hpp"

namespace concept_probe {

/// Pixel position in original-image space.
struct PixelCoord {
  std::int64_t row = 0;
  std::int64_t col = 0;
  friend bool operator==(const PixelCoord&, const PixelCoord&) = default;
};

enum class Split { kTrain, kTest };

/// Per-image metadata carried in manifest.json.
struct ImageEntry {
  std::string image_id;
  Split split = Split::kTrain;
  std::size_t class_label = 0;
  std::vector<std::uint8_t> concept_labels;      // u_i, one 0/1 entry per concept
  std::map<std::size_t, PixelCoord> part_points;  // concept index -> centre pixel
  std::size_t image_rows = 0;
  std::size_t image_cols = 0;
  std::optional<std::string> image_path;  // relative to the dataset root

  bool has_concept(std::size_t j) const { return concept_labels.at(j) != 0; }
  /// Indices of the concepts annotated present.
  std::vector<std::size_t> active_concepts() const;
};

struct FeatureRecord {
  ImageEntry meta;
  Tensor pre_gap;   // H x W x d
  Tensor post_gap;  // d
};

struct DatasetManifest {
  std::size_t num_concepts = 0;
  std::size_t num_classes = 0;
  std::size_t depth = 0;
  std::size_t height = 0;
  std::size_t width = 0;
  std::vector<std::string> concept_names;
  std::vector<std::string> class_names;
  Tensor ground_truth;  // V, num_concepts x num_classes, entries in [0, 1]
  std::vector<std::optional<std::string>> part_map;  // concept -> body part, or none
  std::vector<ImageEntry> images;
  std::string provenance_json = "{}";  // opaque exporter metadata, passed through
};

struct Dataset {
  std::filesystem::path root;
  DatasetManifest manifest;
  std::vector<FeatureRecord> records;  // manifest order
  std::vector<std::string> warnings;

  std::vector<std::size_t> indices(Split split) const;
};

inline constexpr double kGapConsistencyTolerance = 1e-4;

std::filesystem::path pre_gap_path(const std::filesystem::path& root, const std::string& image_id);
std::filesystem::path post_gap_path(const std::filesystem::path& root, const std::string& image_id);

/// Parses and validates manifest.json only.
DatasetManifest load_manifest(const std::filesystem::path& root);

/// Loads the manifest and every record, failing on the first invariant
/// violation with a DataError that names the offending image.
Dataset load_dataset(const std::filesystem::path& root);

/// Writes manifest.json plus the two blobs per record.
void save_dataset(const std::filesystem::path& root, const DatasetManifest& manifest,
                  const std::vector<FeatureRecord>& records);

std::string manifest_to_json(const DatasetManifest& manifest);

struct ConceptSplit {
  std::vector<std::size_t> positives;  // indices into Dataset::records, ascending
  std::vector<std::size_t> negatives;
};

/// Samples N_p train images containing concept j and N_n train images without
/// it, uniformly without replacement.
ConceptSplit positive_negative_split(const std::vector<FeatureRecord>& records, std::size_t concept_index,
                                     std::size_t num_positive, std::size_t num_negative,
                                     std::uint64_t seed);

}  // namespace concept_probe
