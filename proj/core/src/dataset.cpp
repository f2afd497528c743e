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

#include "concept_probe/dataset.hpp"

#include <algorithm>
#include <cmath>
#include <set>
#include <string>

#include <json.hpp>

#include "concept_probe/blob_io.hpp"
#include "concept_probe/errors.hpp"
#include "concept_probe/numerics.hpp"
#include "concept_probe/random.hpp"

namespace concept_probe {
namespace fs = std::filesystem;
using nlohmann::json;

namespace {

constexpr const char* kFormatTag = "concept-probe-dataset/1";

std::size_t get_count(const json& node, const char* key) {
  if (!node.contains(key) || !node[key].is_number_unsigned()) {
    throw DataError(std::string("manifest: missing or invalid '") + key + "'");
  }
  return node[key].get<std::size_t>();
}

std::string split_name(Split split) { return split == Split::kTrain ? "train" : "test"; }

Split parse_split(const std::string& name, const std::string& image_id) {
  if (name == "train") return Split::kTrain;
  if (name == "test") return Split::kTest;
  throw DataError("image " + image_id + ": unknown split '" + name + "'");
}

ImageEntry parse_entry(const json& node, const DatasetManifest& m) {
  ImageEntry e;
  if (!node.contains("id") || !node["id"].is_string()) throw DataError("manifest: image without id");
  e.image_id = node["id"].get<std::string>();
  const std::string& id = e.image_id;
  try {
    e.split = parse_split(node.at("split").get<std::string>(), id);
    const auto label = node.at("class").get<std::int64_t>();
    if (label < 0 || static_cast<std::size_t>(label) >= m.num_classes) {
      throw DataError("image " + id + ": class label " + std::to_string(label) + " out of range");
    }
    e.class_label = static_cast<std::size_t>(label);
    for (const auto& bit : node.at("concepts")) {
      const auto v = bit.get<int>();
      if (v != 0 && v != 1) throw DataError("image " + id + ": concept labels must be 0 or 1");
      e.concept_labels.push_back(static_cast<std::uint8_t>(v));
    }
    if (e.concept_labels.size() != m.num_concepts) {
      throw DataError("image " + id + ": " + std::to_string(e.concept_labels.size()) +
                      " concept labels, manifest declares " + std::to_string(m.num_concepts));
    }
    const auto& size = node.at("image_size");
    e.image_rows = size.at(0).get<std::size_t>();
    e.image_cols = size.at(1).get<std::size_t>();
    if (e.image_rows == 0 || e.image_cols == 0) throw DataError("image " + id + ": empty image size");
    if (node.contains("parts")) {
      for (const auto& [key, point] : node["parts"].items()) {
        const std::size_t j = std::stoul(key);
        if (j >= m.num_concepts) throw DataError("image " + id + ": part for unknown concept " + key);
        PixelCoord p{point.at(0).get<std::int64_t>(), point.at(1).get<std::int64_t>()};
        if (p.row < 0 || p.col < 0 || p.row >= static_cast<std::int64_t>(e.image_rows) ||
            p.col >= static_cast<std::int64_t>(e.image_cols)) {
          throw DataError("image " + id + ": part point for concept " + key + " outside the image");
        }
        e.part_points.emplace(j, p);
      }
    }
    if (node.contains("image_path") && !node["image_path"].is_null()) {
      e.image_path = node["image_path"].get<std::string>();
    }
  } catch (const json::exception& ex) {
    throw DataError("image " + id + ": malformed entry (" + ex.what() + ")");
  } catch (const std::invalid_argument&) {
    throw DataError("image " + id + ": part keys must be concept indices");
  }
  return e;
}

json entry_to_json(const ImageEntry& e) {
  json node;
  node["id"] = e.image_id;
  node["split"] = split_name(e.split);
  node["class"] = e.class_label;
  json bits = json::array();
  for (auto b : e.concept_labels) bits.push_back(static_cast<int>(b));
  node["concepts"] = bits;
  node["image_size"] = {e.image_rows, e.image_cols};
  json parts = json::object();
  for (const auto& [j, p] : e.part_points) parts[std::to_string(j)] = {p.row, p.col};
  node["parts"] = parts;
  node["image_path"] = e.image_path ? json(*e.image_path) : json(nullptr);
  return node;
}

void validate_record(const DatasetManifest& m, const FeatureRecord& r) {
  const std::string& id = r.meta.image_id;
  const std::vector<std::size_t> pre_dims{m.height, m.width, m.depth};
  if (r.pre_gap.dims() != pre_dims) {
    throw DataError("image " + id + ": pre-GAP blob shape does not match manifest H x W x d");
  }
  if (r.post_gap.dims() != std::vector<std::size_t>{m.depth}) {
    throw DataError("image " + id + ": post-GAP blob length does not match manifest d");
  }
  for (float v : r.pre_gap.values()) {
    if (!std::isfinite(v)) throw DataError("image " + id + ": non-finite pre-GAP value");
  }
  const Tensor pooled = gap(r.pre_gap);
  for (std::size_t k = 0; k < m.depth; ++k) {
    const double diff = std::fabs(static_cast<double>(pooled[k]) - r.post_gap[k]);
    if (!(diff <= kGapConsistencyTolerance)) {
      throw DataError("image " + id + ": post-GAP entry " + std::to_string(k) +
                      " differs from the pooled pre-GAP maps by " + std::to_string(diff));
    }
  }
}

}  // namespace

std::vector<std::size_t> ImageEntry::active_concepts() const {
  std::vector<std::size_t> active;
  for (std::size_t j = 0; j < concept_labels.size(); ++j) {
    if (concept_labels[j] != 0) active.push_back(j);
  }
  return active;
}

std::vector<std::size_t> Dataset::indices(Split split) const {
  std::vector<std::size_t> out;
  for (std::size_t i = 0; i < records.size(); ++i) {
    if (records[i].meta.split == split) out.push_back(i);
  }
  return out;
}

fs::path pre_gap_path(const fs::path& root, const std::string& image_id) {
  return root / (image_id + ".pregap.cxt");
}

fs::path post_gap_path(const fs::path& root, const std::string& image_id) {
  return root / (image_id + ".postgap.cxt");
}

DatasetManifest load_manifest(const fs::path& root) {
  const fs::path path = root / "manifest.json";
  if (!fs::exists(path)) throw DataError("missing manifest: " + path.string());
  json doc;
  try {
    doc = json::parse(read_file(path));
  } catch (const json::parse_error& ex) {
    throw DataError(path.string() + ": " + ex.what());
  }
  DatasetManifest m;
  m.num_concepts = get_count(doc, "num_concepts");
  m.num_classes = get_count(doc, "num_classes");
  if (!doc.contains("feature")) throw DataError("manifest: missing 'feature'");
  m.height = get_count(doc["feature"], "height");
  m.width = get_count(doc["feature"], "width");
  m.depth = get_count(doc["feature"], "depth");
  if (m.num_concepts == 0 || m.num_classes == 0 || m.height == 0 || m.width == 0 || m.depth == 0) {
    throw DataError("manifest: counts and feature extents must be positive");
  }
  try {
    m.concept_names = doc.at("concept_names").get<std::vector<std::string>>();
    m.class_names = doc.at("class_names").get<std::vector<std::string>>();
    if (m.concept_names.size() != m.num_concepts || m.class_names.size() != m.num_classes) {
      throw DataError("manifest: name lists do not match num_concepts / num_classes");
    }
    const auto& v = doc.at("ground_truth_V");
    if (v.size() != m.num_concepts) throw DataError("manifest: ground_truth_V must have num_concepts rows");
    m.ground_truth = Tensor({m.num_concepts, m.num_classes});
    for (std::size_t j = 0; j < m.num_concepts; ++j) {
      if (v[j].size() != m.num_classes) throw DataError("manifest: ground_truth_V row " + std::to_string(j) + " has wrong length");
      for (std::size_t k = 0; k < m.num_classes; ++k) {
        const double x = v[j][k].get<double>();
        if (!(x >= 0.0 && x <= 1.0)) {
          throw DataError("manifest: ground_truth_V entry (" + std::to_string(j) + "," + std::to_string(k) + ") outside [0,1]");
        }
        m.ground_truth.at(j, k) = static_cast<float>(x);
      }
    }
    m.part_map.assign(m.num_concepts, std::nullopt);
    if (doc.contains("part_map")) {
      const auto& parts = doc["part_map"];
      if (parts.size() != m.num_concepts) throw DataError("manifest: part_map must have num_concepts entries");
      for (std::size_t j = 0; j < m.num_concepts; ++j) {
        if (!parts[j].is_null()) m.part_map[j] = parts[j].get<std::string>();
      }
    }
    if (doc.contains("provenance")) m.provenance_json = doc["provenance"].dump();
    std::set<std::string> seen;
    for (const auto& node : doc.at("images")) {
      ImageEntry e = parse_entry(node, m);
      if (!seen.insert(e.image_id).second) throw DataError("image " + e.image_id + ": duplicate id");
      m.images.push_back(std::move(e));
    }
  } catch (const json::exception& ex) {
    throw DataError(std::string("manifest: ") + ex.what());
  }
  return m;
}

Dataset load_dataset(const fs::path& root) {
  Dataset ds;
  ds.root = root;
  ds.manifest = load_manifest(root);
  ds.records.reserve(ds.manifest.images.size());
  for (const ImageEntry& e : ds.manifest.images) {
    const fs::path pre = pre_gap_path(root, e.image_id);
    const fs::path post = post_gap_path(root, e.image_id);
    if (!fs::exists(pre)) throw DataError("image " + e.image_id + ": missing blob " + pre.string());
    if (!fs::exists(post)) throw DataError("image " + e.image_id + ": missing blob " + post.string());
    FeatureRecord r{e, read_blob(pre), read_blob(post)};
    validate_record(ds.manifest, r);
    for (const auto& [j, p] : e.part_points) {
      if (!ds.manifest.part_map[j]) {
        ds.warnings.push_back("image " + e.image_id + ": part point for concept " + std::to_string(j) +
                              " which has no part mapping");
      }
    }
    ds.records.push_back(std::move(r));
  }
  return ds;
}

std::string manifest_to_json(const DatasetManifest& m) {
  json doc;
  doc["format"] = kFormatTag;
  doc["num_concepts"] = m.num_concepts;
  doc["num_classes"] = m.num_classes;
  doc["feature"] = {{"height", m.height}, {"width", m.width}, {"depth", m.depth}};
  doc["concept_names"] = m.concept_names;
  doc["class_names"] = m.class_names;
  json v = json::array();
  for (std::size_t j = 0; j < m.num_concepts; ++j) {
    json row = json::array();
    for (std::size_t k = 0; k < m.num_classes; ++k) row.push_back(m.ground_truth.at(j, k));
    v.push_back(row);
  }
  doc["ground_truth_V"] = v;
  json parts = json::array();
  for (const auto& p : m.part_map) parts.push_back(p ? json(*p) : json(nullptr));
  doc["part_map"] = parts;
  doc["provenance"] = json::parse(m.provenance_json);
  json images = json::array();
  for (const auto& e : m.images) images.push_back(entry_to_json(e));
  doc["images"] = images;
  return doc.dump(1) + "\n";
}

void save_dataset(const fs::path& root, const DatasetManifest& manifest,
                  const std::vector<FeatureRecord>& records) {
  fs::create_directories(root);
  write_file(root / "manifest.json", manifest_to_json(manifest));
  for (const auto& r : records) {
    write_blob(pre_gap_path(root, r.meta.image_id), r.pre_gap);
    write_blob(post_gap_path(root, r.meta.image_id), r.post_gap);
  }
}

ConceptSplit positive_negative_split(const std::vector<FeatureRecord>& records, std::size_t concept_index,
                                     std::size_t num_positive, std::size_t num_negative,
                                     std::uint64_t seed) {
  std::vector<std::size_t> pos_pool, neg_pool;
  for (std::size_t i = 0; i < records.size(); ++i) {
    const auto& meta = records[i].meta;
    if (meta.split != Split::kTrain) continue;
    (meta.has_concept(concept_index) ? pos_pool : neg_pool).push_back(i);
  }
  if (pos_pool.size() < num_positive || neg_pool.size() < num_negative) {
    throw DataError("concept " + std::to_string(concept_index) + ": need " + std::to_string(num_positive) +
                    " positives and " + std::to_string(num_negative) + " negatives, train split has " +
                    std::to_string(pos_pool.size()) + " and " + std::to_string(neg_pool.size()));
  }
  std::mt19937_64 rng(seed);
  ConceptSplit split;
  split.positives = sample_without_replacement(std::move(pos_pool), num_positive, rng);
  split.negatives = sample_without_replacement(std::move(neg_pool), num_negative, rng);
  std::sort(split.positives.begin(), split.positives.end());
  std::sort(split.negatives.begin(), split.negatives.end());
  return split;
}

}  // namespace concept_probe
