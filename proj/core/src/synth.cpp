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

#include "concept_probe/synth.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <numeric>
#include <random>
#include <set>

#include <json.hpp>

#include "concept_probe/blob_io.hpp"
#include "concept_probe/coam.hpp"
#include "concept_probe/errors.hpp"
#include "concept_probe/numerics.hpp"
#include "concept_probe/random.hpp"

namespace concept_probe {
namespace fs = std::filesystem;
using nlohmann::json;

namespace {

constexpr std::size_t kDirectionRetries = 10000;
constexpr std::size_t kIncidenceRetries = 10000;

std::vector<double> random_unit(std::mt19937_64& rng, std::size_t d) {
  std::vector<double> v(d);
  double n2 = 0.0;
  for (double& x : v) {
    x = standard_normal(rng);
    n2 += x * x;
  }
  const double n = std::sqrt(n2);
  for (double& x : v) x /= n;
  return v;
}

double dot(const std::vector<double>& a, const std::vector<double>& b) {
  return std::inner_product(a.begin(), a.end(), b.begin(), 0.0);
}

std::vector<std::vector<double>> planted_directions(std::mt19937_64& rng, std::size_t count, std::size_t d) {
  std::vector<std::vector<double>> dirs;
  if (count <= d) {
    // Gram-Schmidt on Gaussian draws gives an exactly orthonormal set.
    while (dirs.size() < count) {
      auto v = random_unit(rng, d);
      for (const auto& u : dirs) {
        const double p = dot(v, u);
        for (std::size_t k = 0; k < d; ++k) v[k] -= p * u[k];
      }
      const double n = std::sqrt(dot(v, v));
      if (n < 1e-6) continue;
      for (double& x : v) x /= n;
      dirs.push_back(std::move(v));
    }
    return dirs;
  }
  for (std::size_t attempt = 0; dirs.size() < count; ++attempt) {
    if (attempt >= kDirectionRetries) {
      throw DataError("synth: cannot place " + std::to_string(count) + " directions in " + std::to_string(d) +
                      " dimensions with pairwise |cosine| <= " + std::to_string(kMaxPlantedCosine));
    }
    auto v = random_unit(rng, d);
    const bool ok = std::all_of(dirs.begin(), dirs.end(),
                                [&](const auto& u) { return std::fabs(dot(v, u)) <= kMaxPlantedCosine; });
    if (ok) dirs.push_back(std::move(v));
  }
  return dirs;
}

bool incidence_usable(const std::vector<std::vector<int>>& inc, std::size_t K) {
  const std::size_t L = inc.size();
  std::set<std::vector<int>> columns;
  for (std::size_t k = 0; k < K; ++k) {
    std::vector<int> col(L);
    for (std::size_t j = 0; j < L; ++j) col[j] = inc[j][k];
    if (!columns.insert(col).second) return false;
  }
  for (std::size_t j = 0; j < L; ++j) {
    const int used = std::accumulate(inc[j].begin(), inc[j].end(), 0);
    if (used == 0 || used == static_cast<int>(K)) return false;
  }
  return true;
}

std::vector<std::vector<int>> random_incidence(std::mt19937_64& rng, const SynthSpec& spec) {
  const std::size_t L = spec.num_concepts, K = spec.num_classes;
  std::vector<std::size_t> all(L);
  std::iota(all.begin(), all.end(), std::size_t{0});
  for (std::size_t attempt = 0; attempt < kIncidenceRetries; ++attempt) {
    std::vector<std::vector<int>> inc(L, std::vector<int>(K, 0));
    for (std::size_t k = 0; k < K; ++k) {
      for (auto j : sample_without_replacement(all, spec.concepts_per_class, rng)) inc[j][k] = 1;
    }
    if (incidence_usable(inc, K)) return inc;
  }
  throw DataError("synth: no incidence with distinct classes and informative concepts found; adjust concepts_per_class");
}

void validate(const SynthSpec& s) {
  if (s.num_classes < 2 || s.num_concepts == 0 || s.depth == 0 || s.height == 0 || s.width == 0) {
    throw UsageError("synth: need >= 2 classes and positive concept count and feature extents");
  }
  if (s.image_rows < s.height || s.image_cols < s.width) throw UsageError("synth: image smaller than the feature grid");
  if (s.rect_rows == 0 || s.rect_cols == 0 || s.rect_rows > s.height || s.rect_cols > s.width) {
    throw UsageError("synth: rectangle does not fit the feature grid");
  }
  if (s.samples_per_class < 2) throw UsageError("synth: need at least 2 samples per class");
  if (!(s.train_fraction > 0.0 && s.train_fraction < 1.0)) throw UsageError("synth: train_fraction must lie in (0, 1)");
  if (!(s.noise_sigma >= 0.0)) throw UsageError("synth: noise_sigma must be >= 0");
  if (!s.incidence && (s.concepts_per_class == 0 || s.concepts_per_class > s.num_concepts)) {
    throw UsageError("synth: concepts_per_class must lie in [1, num_concepts]");
  }
  if (s.incidence) {
    if (s.incidence->size() != s.num_concepts) throw UsageError("synth: incidence must have num_concepts rows");
    for (const auto& row : *s.incidence) {
      if (row.size() != s.num_classes) throw UsageError("synth: incidence rows must have num_classes entries");
      for (int v : row) {
        if (v != 0 && v != 1) throw UsageError("synth: incidence entries must be 0 or 1");
      }
    }
  }
  if (s.rects) {
    if (s.rects->size() != s.num_concepts) throw UsageError("synth: need one rectangle per concept");
    for (const auto& r : *s.rects) {
      if (r.rows == 0 || r.cols == 0 || r.row + r.rows > s.height || r.col + r.cols > s.width) {
        throw UsageError("synth: rectangle outside the feature grid");
      }
    }
  }
  for (auto [a, b] : s.correlation) {
    if (a >= s.num_concepts || b >= s.num_concepts || a == b) throw UsageError("synth: bad correlation pair");
  }
  for (auto j : s.unmapped_concepts) {
    if (j >= s.num_concepts) throw UsageError("synth: unmapped concept out of range");
  }
}

std::string padded(std::size_t v, std::size_t width) {
  std::string s = std::to_string(v);
  return std::string(width > s.size() ? width - s.size() : 0, '0') + s;
}

// Brute-force expectations with the planted directions standing in for the
// learned bank and the true labels standing in for predictions.
json planted_oracle(const SynthSpec& spec, const SynthOutput& out) {
  const std::size_t L = spec.num_concepts, K = spec.num_classes, d = spec.depth;
  Tensor bank({L, d});
  for (std::size_t j = 0; j < L; ++j) {
    for (std::size_t k = 0; k < d; ++k) bank.at(j, k) = static_cast<float>(out.directions[j][k]);
  }
  std::vector<std::vector<double>> sums(K, std::vector<double>(L, 0.0));
  std::vector<std::size_t> counts(K, 0);
  double cem_hits = 0.0, clm_hits = 0.0;
  std::size_t n_test = 0, clm_images = 0;
  const std::size_t region = static_cast<std::size_t>(
      std::floor(static_cast<double>(spec.image_rows * spec.image_cols) / 12.0 + 0.5));
  for (const auto& rec : out.records) {
    if (rec.meta.split != Split::kTest) continue;
    ++n_test;
    std::vector<double> u(L);
    for (std::size_t j = 0; j < L; ++j) {
      double acc = 0.0;
      for (std::size_t k = 0; k < d; ++k) acc += out.directions[j][k] * rec.post_gap[k];
      u[j] = acc;
    }
    const std::size_t y = rec.meta.class_label;
    ++counts[y];
    for (std::size_t j = 0; j < L; ++j) sums[y][j] += u[j];
    std::size_t top = 0;
    for (std::size_t j = 1; j < L; ++j) {
      if (std::fabs(u[j]) > std::fabs(u[top])) top = j;
    }
    cem_hits += rec.meta.has_concept(top) ? 1.0 : 0.0;
    const auto point = rec.meta.part_points.find(top);
    if (point == rec.meta.part_points.end()) continue;
    ++clm_images;
    const Tensor map = upsample(coam_slice(rec.pre_gap, bank.row(top)), spec.image_rows, spec.image_cols);
    std::vector<std::size_t> order(map.size());
    std::iota(order.begin(), order.end(), std::size_t{0});
    std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return map[a] > map[b]; });
    const std::size_t target = static_cast<std::size_t>(point->second.row) * spec.image_cols +
                               static_cast<std::size_t>(point->second.col);
    for (std::size_t r = 0; r < region; ++r) {
      if (order[r] == target) {
        clm_hits += 1.0;
        break;
      }
    }
  }
  json cgim2 = json::array();
  json ustar = json::array();
  double cgim2_total = 0.0;
  std::size_t cgim2_defined = 0;
  for (std::size_t k = 0; k < K; ++k) {
    std::vector<double> mean(L, 0.0), truth(L);
    for (std::size_t j = 0; j < L; ++j) {
      if (counts[k]) mean[j] = sums[k][j] / static_cast<double>(counts[k]);
      truth[j] = out.incidence[j][k];
    }
    ustar.push_back(mean);
    const auto c = counts[k] ? cosine(std::span<const double>(mean), std::span<const double>(truth)) : std::nullopt;
    cgim2.push_back(c ? json(*c) : json(nullptr));
    if (c) {
      cgim2_total += *c;
      ++cgim2_defined;
    }
  }
  json o;
  o["note"] = "expectations use the planted directions as the concept bank and true labels as predictions";
  o["test_images"] = n_test;
  o["average_concept_matrix_by_class"] = ustar;
  o["cgim2_per_class"] = cgim2;
  o["cgim2_per_class_mean"] = cgim2_defined ? json(cgim2_total / static_cast<double>(cgim2_defined)) : json(nullptr);
  o["cem_uhat_absolute_l1"] = n_test ? json(cem_hits / static_cast<double>(n_test)) : json(nullptr);
  o["clm_uhat_absolute_alpha1_l1"] = clm_images ? json(clm_hits / static_cast<double>(clm_images)) : json(nullptr);
  return o;
}

}  // namespace

PixelCoord rect_centre(const CellRect& rect, const SynthSpec& spec) {
  const double row = (static_cast<double>(rect.row) + 0.5 * static_cast<double>(rect.rows)) *
                     static_cast<double>(spec.image_rows) / static_cast<double>(spec.height);
  const double col = (static_cast<double>(rect.col) + 0.5 * static_cast<double>(rect.cols)) *
                     static_cast<double>(spec.image_cols) / static_cast<double>(spec.width);
  return {std::min<std::int64_t>(static_cast<std::int64_t>(std::floor(row)), spec.image_rows - 1),
          std::min<std::int64_t>(static_cast<std::int64_t>(std::floor(col)), spec.image_cols - 1)};
}

SynthOutput generate(const SynthSpec& spec) {
  validate(spec);
  const std::size_t K = spec.num_classes, L = spec.num_concepts, d = spec.depth;
  const std::size_t H = spec.height, W = spec.width;
  std::mt19937_64 rng(spec.seed);

  SynthOutput out;
  out.directions = planted_directions(rng, L, d);
  out.incidence = spec.incidence ? *spec.incidence : random_incidence(rng, spec);
  if (spec.rects) {
    out.rects = *spec.rects;
  } else {
    for (std::size_t j = 0; j < L; ++j) {
      CellRect r;
      r.rows = spec.rect_rows;
      r.cols = spec.rect_cols;
      r.row = static_cast<std::size_t>(uniform_below(rng, H - spec.rect_rows + 1));
      r.col = static_cast<std::size_t>(uniform_below(rng, W - spec.rect_cols + 1));
      out.rects.push_back(r);
    }
  }
  for (const auto& r : out.rects) out.part_points.push_back(rect_centre(r, spec));

  const std::set<std::size_t> unmapped(spec.unmapped_concepts.begin(), spec.unmapped_concepts.end());
  auto& m = out.manifest;
  m.num_concepts = L;
  m.num_classes = K;
  m.depth = d;
  m.height = H;
  m.width = W;
  for (std::size_t j = 0; j < L; ++j) {
    m.concept_names.push_back("concept_" + padded(j, 2));
    m.part_map.push_back(unmapped.count(j) ? std::nullopt : std::optional<std::string>("region_" + padded(j, 2)));
  }
  for (std::size_t k = 0; k < K; ++k) m.class_names.push_back("class_" + padded(k, 2));
  m.ground_truth = Tensor({L, K});
  for (std::size_t j = 0; j < L; ++j) {
    for (std::size_t k = 0; k < K; ++k) m.ground_truth.at(j, k) = static_cast<float>(out.incidence[j][k]);
  }
  m.provenance_json = json{{"generator", "synth"}, {"spec", json::parse(synth_spec_to_json(spec))}}.dump();

  const auto n_train = static_cast<std::size_t>(
      std::clamp(std::floor(spec.train_fraction * static_cast<double>(spec.samples_per_class) + 0.5), 1.0,
                 static_cast<double>(spec.samples_per_class - 1)));
  for (std::size_t k = 0; k < K; ++k) {
    std::vector<std::size_t> planted;
    for (std::size_t j = 0; j < L; ++j) {
      if (out.incidence[j][k]) planted.push_back(j);
    }
    std::vector<std::size_t> injected = planted;
    for (auto [a, b] : spec.correlation) {
      if (out.incidence[a][k] && std::find(injected.begin(), injected.end(), b) == injected.end()) {
        injected.push_back(b);
      }
    }
    for (std::size_t s = 0; s < spec.samples_per_class; ++s) {
      FeatureRecord rec;
      auto& e = rec.meta;
      e.image_id = "img_c" + padded(k, 3) + "_s" + padded(s, 4);
      e.split = s < n_train ? Split::kTrain : Split::kTest;
      e.class_label = k;
      e.concept_labels.assign(L, 0);
      for (auto j : planted) e.concept_labels[j] = 1;
      for (std::size_t j = 0; j < L; ++j) {
        if (!unmapped.count(j)) e.part_points.emplace(j, out.part_points[j]);
      }
      e.image_rows = spec.image_rows;
      e.image_cols = spec.image_cols;

      std::vector<double> maps(H * W * d, 0.0);
      if (spec.noise_sigma > 0.0) {
        for (double& x : maps) x = spec.noise_sigma * standard_normal(rng);
      }
      for (auto j : injected) {
        const auto& r = out.rects[j];
        for (std::size_t h = r.row; h < r.row + r.rows; ++h) {
          for (std::size_t w = r.col; w < r.col + r.cols; ++w) {
            for (std::size_t c = 0; c < d; ++c) maps[(h * W + w) * d + c] += spec.amplitude * out.directions[j][c];
          }
        }
      }
      rec.pre_gap = Tensor({H, W, d});
      for (std::size_t p = 0; p < maps.size(); ++p) rec.pre_gap[p] = static_cast<float>(maps[p]);
      rec.post_gap = gap(rec.pre_gap);
      m.images.push_back(e);
      out.records.push_back(std::move(rec));
    }
  }

  json oracle;
  oracle["spec"] = json::parse(synth_spec_to_json(spec));
  oracle["directions"] = out.directions;
  json rects = json::array(), points = json::array();
  for (std::size_t j = 0; j < L; ++j) {
    const auto& r = out.rects[j];
    rects.push_back({{"row", r.row}, {"col", r.col}, {"rows", r.rows}, {"cols", r.cols}});
    points.push_back({out.part_points[j].row, out.part_points[j].col});
  }
  oracle["rects"] = rects;
  oracle["part_points"] = points;
  oracle["ground_truth_V"] = out.incidence;
  oracle["expected"] = planted_oracle(spec, out);
  out.oracle_json = oracle.dump(1) + "\n";
  return out;
}

void write_synth(const fs::path& root, const SynthOutput& output) {
  save_dataset(root, output.manifest, output.records);
  write_file(root / "oracle.json", output.oracle_json);
}

SynthSpec parse_synth_spec(const std::string& json_text) {
  SynthSpec s;
  json doc;
  try {
    doc = json::parse(json_text);
  } catch (const json::parse_error& ex) {
    throw UsageError(std::string("synth spec: ") + ex.what());
  }
  static const std::set<std::string> kKnown{
      "num_classes", "num_concepts", "depth",           "height",     "width",          "image_rows",
      "image_cols",  "samples_per_class", "train_fraction", "noise_sigma", "amplitude", "rect_rows",
      "rect_cols",   "concepts_per_class", "incidence",   "rects",      "correlation",    "unmapped_concepts",
      "seed"};
  for (const auto& [key, value] : doc.items()) {
    if (!kKnown.count(key)) throw UsageError("synth spec: unknown field '" + key + "'");
  }
  try {
    auto read = [&](const char* key, auto& field) {
      if (doc.contains(key)) field = doc[key].get<std::decay_t<decltype(field)>>();
    };
    read("num_classes", s.num_classes);
    read("num_concepts", s.num_concepts);
    read("depth", s.depth);
    read("height", s.height);
    read("width", s.width);
    read("image_rows", s.image_rows);
    read("image_cols", s.image_cols);
    read("samples_per_class", s.samples_per_class);
    read("train_fraction", s.train_fraction);
    read("noise_sigma", s.noise_sigma);
    read("amplitude", s.amplitude);
    read("rect_rows", s.rect_rows);
    read("rect_cols", s.rect_cols);
    read("concepts_per_class", s.concepts_per_class);
    read("seed", s.seed);
    read("unmapped_concepts", s.unmapped_concepts);
    if (doc.contains("incidence") && !doc["incidence"].is_null()) {
      s.incidence = doc["incidence"].get<std::vector<std::vector<int>>>();
    }
    if (doc.contains("rects") && !doc["rects"].is_null()) {
      std::vector<CellRect> rects;
      for (const auto& r : doc["rects"]) {
        rects.push_back({r.at("row").get<std::size_t>(), r.at("col").get<std::size_t>(),
                         r.at("rows").get<std::size_t>(), r.at("cols").get<std::size_t>()});
      }
      s.rects = rects;
    }
    if (doc.contains("correlation")) {
      for (const auto& pair : doc["correlation"]) {
        s.correlation.emplace_back(pair.at(0).get<std::size_t>(), pair.at(1).get<std::size_t>());
      }
    }
  } catch (const json::exception& ex) {
    throw UsageError(std::string("synth spec: ") + ex.what());
  }
  return s;
}

std::string synth_spec_to_json(const SynthSpec& s) {
  json doc{{"num_classes", s.num_classes},
           {"num_concepts", s.num_concepts},
           {"depth", s.depth},
           {"height", s.height},
           {"width", s.width},
           {"image_rows", s.image_rows},
           {"image_cols", s.image_cols},
           {"samples_per_class", s.samples_per_class},
           {"train_fraction", s.train_fraction},
           {"noise_sigma", s.noise_sigma},
           {"amplitude", s.amplitude},
           {"rect_rows", s.rect_rows},
           {"rect_cols", s.rect_cols},
           {"concepts_per_class", s.concepts_per_class},
           {"seed", s.seed},
           {"unmapped_concepts", s.unmapped_concepts}};
  doc["incidence"] = s.incidence ? json(*s.incidence) : json(nullptr);
  if (s.rects) {
    json rects = json::array();
    for (const auto& r : *s.rects) rects.push_back({{"row", r.row}, {"col", r.col}, {"rows", r.rows}, {"cols", r.cols}});
    doc["rects"] = rects;
  } else {
    doc["rects"] = nullptr;
  }
  json corr = json::array();
  for (auto [a, b] : s.correlation) corr.push_back({a, b});
  doc["correlation"] = corr;
  return doc.dump(1) + "\n";
}

}  // namespace concept_probe
