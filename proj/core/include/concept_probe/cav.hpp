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
#include <span>
#include <string>
#include <vector>

#include "concept_probe/dataset.hpp"
#include "concept_probe/tensor.hpp"

namespace concept_probe {

struct CavTrainConfig {
  double lambda = 1.0;        // weight on the summed hinge loss
  std::size_t epochs = 500;   // full-batch sub-gradient iterations
  double initial_step = 1.0;  // eta_0 in eta_t = eta_0 / (1 + t)
};

/// Audit trail for one concept's SVM.
struct CavTrainMeta {
  bool trained = false;
  bool degenerate = false;  // zero normal or no better than chance on its own data
  std::size_t num_positive = 0;
  std::size_t num_negative = 0;
  double lambda = 0.0;
  std::uint64_t seed = 0;
  std::size_t epochs = 0;
  double initial_step = 0.0;
  double objective = 0.0;
  double train_accuracy = 0.0;
};

struct CavResult {
  std::vector<float> direction;  // the CAV, i.e. the SVM normal
  float intercept = 0.0f;
  CavTrainMeta meta;
};

/// Linear SVM by deterministic full-batch sub-gradient descent on
/// 0.5 |w|^2 + lambda * sum max(0, 1 - y (w.x + b)). The best iterate by
/// objective is returned, oriented so positives project above negatives.
CavResult train_cav(std::span<const std::span<const float>> positives,
                    std::span<const std::span<const float>> negatives, const CavTrainConfig& config,
                    std::uint64_t seed = 0);

struct BankConfig {
  std::size_t num_positive = 100;
  std::size_t num_negative = 100;
  std::uint64_t seed = 0;
  bool normalize = false;  // rescale each trained CAV to unit length
  std::size_t jobs = 1;
  CavTrainConfig svm;
};

struct ConceptBank {
  Tensor cavs;        // L x d; rows of untrainable concepts are zero
  Tensor intercepts;  // L, diagnostics only
  std::vector<CavTrainMeta> meta;
  std::vector<std::string> warnings;
  BankConfig config;

  std::size_t num_concepts() const { return cavs.dim(0); }
  std::size_t depth() const { return cavs.dim(1); }
};

/// Trains every concept with seed (config.seed XOR j). Concepts without enough
/// examples keep a zero row and are reported in `warnings`.
ConceptBank build_bank(const Dataset& dataset, const BankConfig& config);

void save_bank(const std::filesystem::path& dir, const ConceptBank& bank);
ConceptBank load_bank(const std::filesystem::path& dir);

}  // namespace concept_probe
