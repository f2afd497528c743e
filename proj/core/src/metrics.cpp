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

#include "concept_probe/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <tuple>

#include "concept_probe/coam.hpp"
#include "concept_probe/errors.hpp"
#include "concept_probe/parallel.hpp"

namespace concept_probe {
namespace {

void require_same_shape(const Tensor& a, const Tensor& b, const char* what) {
  if (a.rank() != 2 || a.dims() != b.dims()) throw UsageError(std::string(what) + ": L x K shapes differ");
}

// Cosine of each row (per concept) or column (per class) of `model` against
// `truth`, using only the classes flagged in `use_class`.
std::vector<MaybeScore> matrix_cosines(const std::vector<double>& model, const Tensor& truth,
                                       const std::vector<bool>& use_class, CgimAxis axis) {
  const std::size_t L = truth.dim(0), K = truth.dim(1);
  std::vector<MaybeScore> out;
  std::vector<double> a, b;
  if (axis == CgimAxis::kConcept) {
    for (std::size_t j = 0; j < L; ++j) {
      a.clear();
      b.clear();
      for (std::size_t k = 0; k < K; ++k) {
        if (!use_class[k]) continue;
        a.push_back(model[j * K + k]);
        b.push_back(truth.at(j, k));
      }
      out.push_back(a.empty() ? std::nullopt : cosine(a, b));
    }
  } else {
    for (std::size_t k = 0; k < K; ++k) {
      if (!use_class[k]) {
        out.push_back(std::nullopt);
        continue;
      }
      a.assign(L, 0.0);
      b.assign(L, 0.0);
      for (std::size_t j = 0; j < L; ++j) {
        a[j] = model[j * K + k];
        b[j] = truth.at(j, k);
      }
      out.push_back(cosine(a, b));
    }
  }
  return out;
}

std::vector<double> widen(const Tensor& t) { return {t.values().begin(), t.values().end()}; }

}  // namespace

AverageConceptMatrix average_concept_matrix(const Tensor& activations, std::span<const std::size_t> labels,
                                            std::span<const std::size_t> predictions, std::size_t num_classes) {
  const std::size_t N = labels.size();
  if (predictions.size() != N || (N > 0 && activations.dim(0) != N)) {
    throw UsageError("average_concept_matrix: inconsistent image counts");
  }
  const std::size_t L = activations.dim(1);
  std::vector<double> sums(L * num_classes, 0.0);
  AverageConceptMatrix out;
  out.counts.assign(num_classes, 0);
  for (std::size_t i = 0; i < N; ++i) {
    if (labels[i] != predictions[i]) continue;
    const std::size_t k = labels[i];
    ++out.counts[k];
    const auto u = activations.row(i);
    for (std::size_t j = 0; j < L; ++j) sums[j * num_classes + k] += u[j];
  }
  out.mean = Tensor({L, num_classes});
  out.defined.assign(num_classes, false);
  for (std::size_t k = 0; k < num_classes; ++k) {
    if (out.counts[k] == 0) continue;
    out.defined[k] = true;
    for (std::size_t j = 0; j < L; ++j) {
      out.mean.at(j, k) = static_cast<float>(sums[j * num_classes + k] / static_cast<double>(out.counts[k]));
    }
  }
  return out;
}

std::vector<MaybeScore> cgim1(const Tensor& theta, const Tensor& truth, CgimAxis axis) {
  require_same_shape(theta, truth, "cgim1");
  return matrix_cosines(widen(theta), truth, std::vector<bool>(truth.dim(1), true), axis);
}

std::vector<MaybeScore> cgim2(const AverageConceptMatrix& average, const Tensor& truth, CgimAxis axis) {
  require_same_shape(average.mean, truth, "cgim2");
  return matrix_cosines(widen(average.mean), truth, average.defined, axis);
}

std::vector<MaybeScore> cgim3(const Tensor& theta, const AverageConceptMatrix& average, const Tensor& truth,
                              CgimAxis axis) {
  require_same_shape(theta, truth, "cgim3");
  require_same_shape(average.mean, truth, "cgim3");
  std::vector<double> product(theta.size());
  for (std::size_t p = 0; p < product.size(); ++p) {
    product[p] = static_cast<double>(theta[p]) * average.mean[p];
  }
  return matrix_cosines(product, truth, average.defined, axis);
}

double cem(std::span<const std::size_t> ranking, std::span<const std::uint8_t> concept_labels, std::size_t l) {
  if (l == 0 || l > ranking.size()) {
    throw UsageError("cem: l must lie in [1, " + std::to_string(ranking.size()) + "], got " + std::to_string(l));
  }
  std::size_t present = 0;
  for (std::size_t s = 0; s < l; ++s) present += concept_labels[ranking[s]] != 0 ? 1 : 0;
  return static_cast<double>(present) / static_cast<double>(l);
}

std::size_t top_alpha_count(double alpha, std::size_t rows, std::size_t cols) {
  if (!(alpha > 0.0) || alpha > 12.0) throw UsageError("alpha must lie in (0, 12], got " + std::to_string(alpha));
  const double exact = alpha * static_cast<double>(rows) * static_cast<double>(cols) / 12.0;
  return std::min(static_cast<std::size_t>(std::floor(exact + 0.5)), rows * cols);
}

bool region_contains(const Tensor& map, PixelCoord p, const RegionSpec& region) {
  if (map.rank() != 2) throw UsageError("region_contains: expected a rank-2 map");
  const std::size_t rows = map.dim(0), cols = map.dim(1);
  if (p.row < 0 || p.col < 0 || p.row >= static_cast<std::int64_t>(rows) ||
      p.col >= static_cast<std::int64_t>(cols)) {
    throw DataError("part point (" + std::to_string(p.row) + "," + std::to_string(p.col) + ") outside the image");
  }
  const auto v = map.values();
  const std::size_t target = static_cast<std::size_t>(p.row) * cols + static_cast<std::size_t>(p.col);
  const float value = v[target];
  if (region.kind == RegionKind::kTopAlpha) {
    const std::size_t size = top_alpha_count(region.value, rows, cols);
    // Rank of the target pixel under (value desc, row-major index asc).
    std::size_t ahead = 0;
    for (std::size_t q = 0; q < v.size(); ++q) {
      if (v[q] > value || (v[q] == value && q < target)) ++ahead;
    }
    return ahead < size;
  }
  const auto [lo, hi] = std::minmax_element(v.begin(), v.end());
  const double span = static_cast<double>(*hi) - *lo;
  if (!(span > 0.0)) return false;
  return (value - static_cast<double>(*lo)) / span >= region.value;
}

ClmImageResult clm_image(std::span<const std::size_t> ranking, std::size_t l,
                         const std::map<std::size_t, PixelCoord>& part_points,
                         const std::function<bool(std::size_t)>& eligible,
                         const std::function<const Tensor&(std::size_t)>& map_of, const RegionSpec& region) {
  if (l == 0 || l > ranking.size()) throw UsageError("clm: l out of range");
  ClmImageResult r;
  for (std::size_t s = 0; s < l; ++s) {
    const std::size_t j = ranking[s];
    const auto point = part_points.find(j);
    if (point == part_points.end() || !eligible(j)) {
      ++r.skipped;
      continue;
    }
    ++r.evaluated;
    if (region_contains(map_of(j), point->second, region)) ++r.hits;
  }
  if (r.evaluated > 0) r.score = static_cast<double>(r.hits) / static_cast<double>(r.evaluated);
  return r;
}

std::array<std::size_t, kHistogramBins> histogram(std::span<const MaybeScore> scores) {
  std::array<std::size_t, kHistogramBins> bins{};
  const double width = 2.0 / static_cast<double>(kHistogramBins);
  for (const auto& s : scores) {
    if (!s) continue;
    const double pos = std::ceil((*s + 1.0) / width) - 1.0;
    const auto bin = static_cast<std::size_t>(std::clamp(pos, 0.0, static_cast<double>(kHistogramBins - 1)));
    ++bins[bin];
  }
  return bins;
}

std::pair<MaybeScore, std::size_t> defined_mean(std::span<const MaybeScore> scores) {
  double total = 0.0;
  std::size_t defined = 0;
  for (const auto& s : scores) {
    if (!s) continue;
    total += *s;
    ++defined;
  }
  const std::size_t undefined = scores.size() - defined;
  if (defined == 0) return {std::nullopt, undefined};
  return {total / static_cast<double>(defined), undefined};
}

namespace {

struct ImageWork {
  std::size_t predicted = 0;
  bool correct = false;
  // Indexed [basis * keys + key][l index].
  std::vector<std::vector<double>> cem;
  // Indexed [basis * keys + key][region index][l index].
  std::vector<std::vector<std::vector<ClmImageResult>>> clm;
};

}  // namespace

SuiteReport evaluate_suite(const Dataset& dataset, const ConceptBank& bank, const BottleneckModel& model,
                           const SuiteConfig& config) {
  const auto& m = dataset.manifest;
  const std::size_t L = m.num_concepts, K = m.num_classes;
  if (bank.num_concepts() != L || bank.depth() != m.depth) {
    throw DataError("concept bank shape does not match the dataset manifest");
  }
  if (model.num_concepts() != L || model.num_classes() != K) {
    throw DataError("classifier shape does not match the dataset manifest");
  }
  for (auto l : config.l_values) {
    if (l == 0 || l > L) throw UsageError("l must lie in [1, " + std::to_string(L) + "], got " + std::to_string(l));
  }
  std::vector<RegionSpec> regions;
  for (double a : config.alphas) {
    top_alpha_count(a, 12, 1);  // validates alpha
    regions.push_back(RegionSpec::top_alpha(a));
  }
  if (config.tau) regions.push_back(RegionSpec::threshold(*config.tau));

  std::vector<std::size_t> test = dataset.indices(Split::kTest);
  std::sort(test.begin(), test.end(), [&](std::size_t a, std::size_t b) {
    return dataset.records[a].meta.image_id < dataset.records[b].meta.image_id;
  });
  const std::size_t N = test.size();
  const std::size_t rankings = config.bases.size() * config.rank_keys.size();

  Tensor activations({std::max<std::size_t>(N, 1), L});
  std::vector<ImageWork> work(N);
  parallel_for(N, config.jobs, [&](std::size_t n) {
    const FeatureRecord& rec = dataset.records[test[n]];
    const Tensor u = project(bank, rec.post_gap.values());
    std::copy(u.values().begin(), u.values().end(), activations.row(n).begin());
    ImageWork& w = work[n];
    w.predicted = predict(model, u.values()).class_index;
    w.correct = w.predicted == rec.meta.class_label;
    std::map<std::size_t, Tensor> maps;
    auto map_of = [&](std::size_t j) -> const Tensor& {
      auto it = maps.find(j);
      if (it == maps.end()) {
        const Tensor raw = coam_slice(rec.pre_gap, bank.cavs.row(j));
        it = maps.emplace(j, upsample(raw, rec.meta.image_rows, rec.meta.image_cols)).first;
      }
      return it->second;
    };
    auto eligible = [&](std::size_t j) { return m.part_map[j].has_value(); };
    w.cem.resize(rankings);
    w.clm.resize(rankings);
    for (std::size_t b = 0; b < config.bases.size(); ++b) {
      const auto scores = local_importance(model, u.values(), w.predicted, config.bases[b]);
      for (std::size_t kk = 0; kk < config.rank_keys.size(); ++kk) {
        const auto ranking = rank_desc(scores, config.rank_keys[kk]);
        const std::size_t slot = b * config.rank_keys.size() + kk;
        if (config.include_cem) {
          for (auto l : config.l_values) w.cem[slot].push_back(cem(ranking, rec.meta.concept_labels, l));
        }
        if (config.include_clm) {
          w.clm[slot].resize(regions.size());
          for (std::size_t r = 0; r < regions.size(); ++r) {
            for (auto l : config.l_values) {
              w.clm[slot][r].push_back(clm_image(ranking, l, rec.meta.part_points, eligible, map_of, regions[r]));
            }
          }
        }
      }
    }
  });

  SuiteReport report;
  report.config = config;
  report.num_test = N;
  for (const auto& w : work) report.num_correct += w.correct ? 1 : 0;
  report.test_accuracy = N ? static_cast<double>(report.num_correct) / static_cast<double>(N) : 0.0;
  for (const auto& rec : dataset.records) report.image_ids.push_back(rec.meta.image_id);
  report.concept_names = m.concept_names;
  report.class_names = m.class_names;

  auto in_subset = [&](std::size_t n, ImageSubset subset) {
    return subset == ImageSubset::kEntireTest || work[n].correct;
  };

  for (std::size_t b = 0; b < config.bases.size(); ++b) {
    for (std::size_t kk = 0; kk < config.rank_keys.size(); ++kk) {
      const std::size_t slot = b * config.rank_keys.size() + kk;
      for (auto subset : config.subsets) {
        if (config.include_cem) {
          for (std::size_t li = 0; li < config.l_values.size(); ++li) {
            CemCell cell{config.bases[b], config.rank_keys[kk], subset, config.l_values[li], std::nullopt, {}, {}};
            double total = 0.0;
            for (std::size_t n = 0; n < N; ++n) {
              if (!in_subset(n, subset)) continue;
              cell.images.push_back(test[n]);
              cell.values.push_back(work[n].cem[slot][li]);
              total += work[n].cem[slot][li];
            }
            if (!cell.values.empty()) cell.mean = total / static_cast<double>(cell.values.size());
            report.cem.push_back(std::move(cell));
          }
        }
        if (config.include_clm) {
          for (std::size_t r = 0; r < regions.size(); ++r) {
            for (std::size_t li = 0; li < config.l_values.size(); ++li) {
              ClmCell cell{config.bases[b], config.rank_keys[kk], subset, regions[r], config.l_values[li],
                           std::nullopt, 0, 0, {}, {}};
              for (std::size_t n = 0; n < N; ++n) {
                if (!in_subset(n, subset)) continue;
                const auto& res = work[n].clm[slot][r][li];
                cell.images.push_back(test[n]);
                cell.values.push_back(res.score);
                cell.skipped_concepts += res.skipped;
              }
              std::tie(cell.mean, cell.undefined_images) = defined_mean(cell.values);
              report.clm.push_back(std::move(cell));
            }
          }
        }
      }
    }
  }

  std::vector<std::size_t> labels(N), predictions(N);
  for (std::size_t n = 0; n < N; ++n) {
    labels[n] = dataset.records[test[n]].meta.class_label;
    predictions[n] = work[n].predicted;
  }
  report.average = N ? average_concept_matrix(activations, labels, predictions, K)
                     : average_concept_matrix(Tensor({1, L}), {}, {}, K);
  for (int type : config.cgim_types) {
    for (auto axis : config.cgim_axes) {
      CgimResult res;
      res.type = type;
      res.axis = axis;
      switch (type) {
        case 1: res.scores = cgim1(model.theta, m.ground_truth, axis); break;
        case 2: res.scores = cgim2(report.average, m.ground_truth, axis); break;
        case 3: res.scores = cgim3(model.theta, report.average, m.ground_truth, axis); break;
        default: throw UsageError("CGIM type must be 1, 2 or 3");
      }
      std::tie(res.mean, res.undefined) = defined_mean(res.scores);
      res.histogram = histogram(res.scores);
      report.cgim.push_back(std::move(res));
    }
  }
  return report;
}

std::string to_string(ScoreBasis basis) {
  switch (basis) {
    case ScoreBasis::kTheta: return "theta";
    case ScoreBasis::kUhat: return "uhat";
    case ScoreBasis::kThetaUhat: return "theta_uhat";
  }
  return "?";
}

std::string to_string(RankKey key) { return key == RankKey::kAbsolute ? "absolute" : "signed"; }

std::string to_string(ImageSubset subset) {
  return subset == ImageSubset::kEntireTest ? "entire_test" : "correct_only";
}

std::string to_string(CgimAxis axis) { return axis == CgimAxis::kConcept ? "concept" : "class"; }

ScoreBasis parse_basis(const std::string& text) {
  if (text == "theta") return ScoreBasis::kTheta;
  if (text == "uhat") return ScoreBasis::kUhat;
  if (text == "theta_uhat") return ScoreBasis::kThetaUhat;
  throw UsageError("unknown score basis '" + text + "' (theta, uhat, theta_uhat)");
}

ImageSubset parse_subset(const std::string& text) {
  if (text == "entire" || text == "entire_test") return ImageSubset::kEntireTest;
  if (text == "correct" || text == "correct_only") return ImageSubset::kCorrectOnly;
  throw UsageError("unknown image subset '" + text + "' (entire, correct)");
}

CgimAxis parse_axis(const std::string& text) {
  if (text == "concept") return CgimAxis::kConcept;
  if (text == "class") return CgimAxis::kClass;
  throw UsageError("unknown CGIM axis '" + text + "' (concept, class)");
}

}  // namespace concept_probe
