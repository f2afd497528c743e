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

#include <random>
#include <string>
#include <vector>

#include "concept_probe/dataset.hpp"
#include "concept_probe/numerics.hpp"
#include "concept_probe/random.hpp"

namespace concept_probe::testing {

/// A hand-built dataset: `n` images, L concepts, K classes, random features.
/// Image i has class i % K and concept j iff (i + j) % 2 == 0.
inline std::pair<DatasetManifest, std::vector<FeatureRecord>> tiny_dataset(std::size_t n, std::size_t L,
                                                                          std::size_t K, std::size_t H = 2,
                                                                          std::size_t W = 3, std::size_t d = 4,
                                                                          std::uint64_t seed = 1) {
  std::mt19937_64 rng(seed);
  DatasetManifest m;
  m.num_concepts = L;
  m.num_classes = K;
  m.height = H;
  m.width = W;
  m.depth = d;
  for (std::size_t j = 0; j < L; ++j) m.concept_names.push_back("concept_" + std::to_string(j));
  for (std::size_t k = 0; k < K; ++k) m.class_names.push_back("class_" + std::to_string(k));
  m.ground_truth = Tensor({L, K});
  m.part_map.assign(L, std::string("part"));
  std::vector<FeatureRecord> records;
  for (std::size_t i = 0; i < n; ++i) {
    ImageEntry e;
    e.image_id = "im" + std::to_string(i);
    e.split = (i % 4 == 3) ? Split::kTest : Split::kTrain;
    e.class_label = i % K;
    e.image_rows = 8;
    e.image_cols = 12;
    for (std::size_t j = 0; j < L; ++j) {
      e.concept_labels.push_back(static_cast<std::uint8_t>((i + j) % 2 == 0));
      if (e.concept_labels.back()) e.part_points[j] = PixelCoord{static_cast<std::int64_t>(j % 8), 1};
    }
    Tensor pre({H, W, d});
    for (auto& v : pre.values()) v = static_cast<float>(standard_normal(rng));
    records.push_back(FeatureRecord{e, pre, gap(pre)});
    m.images.push_back(e);
  }
  return {m, records};
}

}  // namespace concept_probe::testing
