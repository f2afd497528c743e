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
#include <functional>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "concept_probe/bottleneck.hpp"
#include "concept_probe/cav.hpp"
#include "concept_probe/dataset.hpp"
#include "concept_probe/numerics.hpp"
#include "concept_probe/tensor.hpp"

namespace concept_probe {

/// A similarity score, or nullopt where it is undefined (zero vector).
using MaybeScore = std::optional<double>;

/// Column k is the mean activation vector of the test images correctly
/// predicted as class k. Classes with no such image are undefined.
struct AverageConceptMatrix {
  Tensor mean;                      // L x K, zero in undefined columns
  std::vector<std::size_t> counts;  // N_k
  std::vector<bool> defined;        // N_k > 0
};

/// `activations` is N x L over the test images.
AverageConceptMatrix average_concept_matrix(const Tensor& activations, std::span<const std::size_t> labels,
                                            std::span<const std::size_t> predictions, std::size_t num_classes);

enum class CgimAxis { kConcept, kClass };

/// theta against V, row-wise (per concept) or column-wise (per class).
std::vector<MaybeScore> cgim1(const Tensor& theta, const Tensor& truth, CgimAxis axis);

/// Average concept matrix against V. Per class, undefined classes score
/// nullopt; per concept, undefined classes are dropped from both vectors.
std::vector<MaybeScore> cgim2(const AverageConceptMatrix& average, const Tensor& truth, CgimAxis axis);

/// theta (Hadamard) average concept matrix against V, with the cgim2 masking rules.
std::vector<MaybeScore> cgim3(const Tensor& theta, const AverageConceptMatrix& average, const Tensor& truth,
                              CgimAxis axis);

/// Fraction of the first l ranked concepts annotated present.
double cem(std::span<const std::size_t> ranking, std::span<const std::uint8_t> concept_labels, std::size_t l);

enum class RegionKind { kTopAlpha, kThreshold };

struct RegionSpec {
  RegionKind kind = RegionKind::kTopAlpha;
  double value = 1.0;  // alpha in (0, 12] or tau

  static RegionSpec top_alpha(double alpha) { return {RegionKind::kTopAlpha, alpha}; }
  static RegionSpec threshold(double tau) { return {RegionKind::kThreshold, tau}; }
};

/// round-half-up(alpha * rows * cols / 12); alpha must lie in (0, 12].
std::size_t top_alpha_count(double alpha, std::size_t rows, std::size_t cols);

/// Whether pixel p lies in the activated region of a full-resolution map.
/// Top-alpha regions rank pixels by value, ties in row-major order; threshold
/// regions keep min-max normalized values >= tau (empty for a constant map).
bool region_contains(const Tensor& map, PixelCoord p, const RegionSpec& region);

struct ClmImageResult {
  std::size_t hits = 0;
  std::size_t evaluated = 0;
  std::size_t skipped = 0;  // top-l concepts without a part point
  MaybeScore score;         // hits / evaluated, nullopt when nothing was evaluated
};

/// CLM for one image over its first l ranked concepts. `eligible(j)` says
/// whether concept j has a usable part point; `map_of(j)` yields its
/// upsampled activation map.
ClmImageResult clm_image(std::span<const std::size_t> ranking, std::size_t l,
                         const std::map<std::size_t, PixelCoord>& part_points,
                         const std::function<bool(std::size_t)>& eligible,
                         const std::function<const Tensor&(std::size_t)>& map_of, const RegionSpec& region);

inline constexpr std::size_t kHistogramBins = 20;

/// Counts over 20 equal bins of [-1, 1], right-closed (-1 lands in the first bin).
std::array<std::size_t, kHistogramBins> histogram(std::span<const MaybeScore> scores);

/// Mean over defined entries in index order, with the undefined count.
std::pair<MaybeScore, std::size_t> defined_mean(std::span<const MaybeScore> scores);

enum class ImageSubset { kEntireTest, kCorrectOnly };

struct SuiteConfig {
  std::vector<std::size_t> l_values{1, 3, 5};
  std::vector<double> alphas{1.0, 3.0, 6.0};
  std::optional<double> tau;
  std::vector<ScoreBasis> bases{ScoreBasis::kTheta, ScoreBasis::kUhat, ScoreBasis::kThetaUhat};
  std::vector<RankKey> rank_keys{RankKey::kAbsolute, RankKey::kSigned};
  std::vector<ImageSubset> subsets{ImageSubset::kEntireTest, ImageSubset::kCorrectOnly};
  bool include_cem = true;
  bool include_clm = true;
  std::vector<int> cgim_types{1, 2, 3};
  std::vector<CgimAxis> cgim_axes{CgimAxis::kConcept, CgimAxis::kClass};
  std::size_t jobs = 1;
};

struct CemCell {
  ScoreBasis basis;
  RankKey key;
  ImageSubset subset;
  std::size_t l;
  MaybeScore mean;
  std::vector<std::size_t> images;  // record indices
  std::vector<double> values;
};

struct ClmCell {
  ScoreBasis basis;
  RankKey key;
  ImageSubset subset;
  RegionSpec region;
  std::size_t l;
  MaybeScore mean;
  std::size_t undefined_images = 0;
  std::size_t skipped_concepts = 0;
  std::vector<std::size_t> images;
  std::vector<MaybeScore> values;
};

struct CgimResult {
  int type = 1;
  CgimAxis axis = CgimAxis::kConcept;
  std::vector<MaybeScore> scores;
  MaybeScore mean;
  std::size_t undefined = 0;
  std::array<std::size_t, kHistogramBins> histogram{};
};

struct SuiteReport {
  SuiteConfig config;
  std::size_t num_test = 0;
  std::size_t num_correct = 0;
  double test_accuracy = 0.0;
  AverageConceptMatrix average;
  std::vector<CemCell> cem;
  std::vector<ClmCell> clm;
  std::vector<CgimResult> cgim;
  std::vector<std::string> image_ids;  // record index -> id, for dumps
  std::vector<std::string> concept_names;
  std::vector<std::string> class_names;
};

/// Runs every configured metric over the test split. Per-image work is
/// spread over `config.jobs` threads; reductions run in ascending image-id
/// order so results do not depend on the thread count.
SuiteReport evaluate_suite(const Dataset& dataset, const ConceptBank& bank, const BottleneckModel& model,
                           const SuiteConfig& config);

std::string to_string(ScoreBasis basis);
std::string to_string(RankKey key);
std::string to_string(ImageSubset subset);
std::string to_string(CgimAxis axis);
ScoreBasis parse_basis(const std::string& text);
ImageSubset parse_subset(const std::string& text);
CgimAxis parse_axis(const std::string& text);

}  // namespace concept_probe
