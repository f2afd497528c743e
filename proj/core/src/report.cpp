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

#include "concept_probe/report.hpp"

#include <cstdio>
#include <iomanip>
#include <sstream>

#include <json.hpp>

#include "concept_probe/errors.hpp"

namespace concept_probe {
using nlohmann::json;

namespace {

json score_json(const MaybeScore& s) { return s ? json(*s) : json(nullptr); }

std::string region_name(RegionKind kind) { return kind == RegionKind::kTopAlpha ? "top_alpha" : "threshold"; }

std::string fixed(const json& value, int precision = 3) {
  if (value.is_null()) return "null";
  std::ostringstream out;
  out << std::fixed << std::setprecision(precision) << value.get<double>();
  return out.str();
}

std::string pad(const std::string& s, std::size_t width) {
  return s.size() >= width ? s + " " : s + std::string(width - s.size(), ' ');
}

json parse_report(const std::string& text) {
  try {
    return json::parse(text);
  } catch (const json::parse_error& ex) {
    throw DataError(std::string("report: ") + ex.what());
  }
}

std::string csv_value(const json& v) {
  if (v.is_null()) return "";
  if (v.is_string()) return v.get<std::string>();
  return v.dump();
}

}  // namespace

std::string report_to_json(const SuiteReport& report) {
  json doc;
  doc["kind"] = "concept-probe-report/1";
  doc["test"] = {{"images", report.num_test}, {"correct", report.num_correct}, {"accuracy", report.test_accuracy}};
  json cem = json::array();
  for (const auto& c : report.cem) {
    json items = json::array();
    for (std::size_t i = 0; i < c.images.size(); ++i) {
      items.push_back({{"id", report.image_ids[c.images[i]]}, {"value", c.values[i]}});
    }
    cem.push_back({{"basis", to_string(c.basis)},
                   {"rank_key", to_string(c.key)},
                   {"subset", to_string(c.subset)},
                   {"l", c.l},
                   {"mean", score_json(c.mean)},
                   {"images", c.images.size()},
                   {"per_image", items}});
  }
  json clm = json::array();
  for (const auto& c : report.clm) {
    json items = json::array();
    for (std::size_t i = 0; i < c.images.size(); ++i) {
      items.push_back({{"id", report.image_ids[c.images[i]]}, {"value", score_json(c.values[i])}});
    }
    clm.push_back({{"basis", to_string(c.basis)},
                   {"rank_key", to_string(c.key)},
                   {"subset", to_string(c.subset)},
                   {"region", region_name(c.region.kind)},
                   {"region_value", c.region.value},
                   {"l", c.l},
                   {"mean", score_json(c.mean)},
                   {"images", c.images.size()},
                   {"undefined_images", c.undefined_images},
                   {"skipped_concepts", c.skipped_concepts},
                   {"per_image", items}});
  }
  json cgim = json::array();
  for (const auto& g : report.cgim) {
    const auto& names = g.axis == CgimAxis::kConcept ? report.concept_names : report.class_names;
    json items = json::array();
    for (std::size_t i = 0; i < g.scores.size(); ++i) {
      items.push_back({{"index", i}, {"name", names.at(i)}, {"value", score_json(g.scores[i])}});
    }
    cgim.push_back({{"type", g.type},
                    {"axis", to_string(g.axis)},
                    {"mean", score_json(g.mean)},
                    {"undefined", g.undefined},
                    {"histogram", {{"range", {-1.0, 1.0}}, {"bins", kHistogramBins}, {"counts", g.histogram}}},
                    {"scores", items}});
  }
  doc["cem"] = cem;
  doc["clm"] = clm;
  doc["cgim"] = cgim;
  json counts = json::array(), defined = json::array();
  for (std::size_t k = 0; k < report.average.counts.size(); ++k) {
    counts.push_back(report.average.counts[k]);
    defined.push_back(static_cast<bool>(report.average.defined[k]));
  }
  doc["average_concept_matrix"] = {{"correct_per_class", counts}, {"defined", defined}};
  return doc.dump(1) + "\n";
}

std::string merge_reports(const std::vector<std::string>& documents) {
  json merged;
  merged["kind"] = "concept-probe-report/1";
  merged["cem"] = json::array();
  merged["clm"] = json::array();
  merged["cgim"] = json::array();
  for (const auto& text : documents) {
    const json doc = parse_report(text);
    if (!merged.contains("test") && doc.contains("test")) merged["test"] = doc["test"];
    if (!merged.contains("average_concept_matrix") && doc.contains("average_concept_matrix")) {
      merged["average_concept_matrix"] = doc["average_concept_matrix"];
    }
    for (const char* section : {"cem", "clm", "cgim"}) {
      if (!doc.contains(section)) continue;
      for (const auto& item : doc[section]) merged[section].push_back(item);
    }
  }
  return merged.dump(1) + "\n";
}

std::string format_text(const std::string& report_json) {
  const json doc = parse_report(report_json);
  std::ostringstream out;
  if (doc.contains("test")) {
    const auto& t = doc["test"];
    out << "test images " << t["images"] << ", correct " << t["correct"] << ", accuracy "
        << fixed(t["accuracy"]) << "\n";
  }
  if (!doc["cem"].empty()) {
    out << "\nCEM (mean over images)\n";
    out << pad("basis", 12) << pad("rank_key", 10) << pad("subset", 14) << pad("l", 4) << pad("mean", 8)
        << "images\n";
    for (const auto& c : doc["cem"]) {
      out << pad(c["basis"], 12) << pad(c["rank_key"], 10) << pad(c["subset"], 14)
          << pad(std::to_string(c["l"].get<int>()), 4) << pad(fixed(c["mean"]), 8) << c["images"] << "\n";
    }
  }
  if (!doc["clm"].empty()) {
    out << "\nCLM (mean over images with at least one located concept)\n";
    out << pad("basis", 12) << pad("rank_key", 10) << pad("subset", 14) << pad("region", 12) << pad("value", 7)
        << pad("l", 4) << pad("mean", 8) << pad("images", 8) << pad("undef", 7) << "skipped\n";
    for (const auto& c : doc["clm"]) {
      out << pad(c["basis"], 12) << pad(c["rank_key"], 10) << pad(c["subset"], 14) << pad(c["region"], 12)
          << pad(fixed(c["region_value"], 2), 7) << pad(std::to_string(c["l"].get<int>()), 4)
          << pad(fixed(c["mean"]), 8) << pad(c["images"].dump(), 8) << pad(c["undefined_images"].dump(), 7)
          << c["skipped_concepts"] << "\n";
    }
  }
  if (!doc["cgim"].empty()) {
    out << "\nCGIM (cosine with the ground-truth concept matrix)\n";
    for (const auto& g : doc["cgim"]) {
      out << "type " << g["type"] << " per " << pad(g["axis"], 8) << "mean " << pad(fixed(g["mean"]), 8)
          << "undefined " << g["undefined"] << "\n  histogram [-1,1] x20:";
      for (const auto& count : g["histogram"]["counts"]) out << " " << count;
      out << "\n";
    }
  }
  return out.str();
}

std::string format_csv(const std::string& report_json) {
  const json doc = parse_report(report_json);
  std::ostringstream out;
  out << "metric,type,axis,basis,rank_key,subset,region,region_value,l,item,value\n";
  for (const auto& c : doc["cem"]) {
    for (const auto& item : c["per_image"]) {
      out << "cem,,," << csv_value(c["basis"]) << "," << csv_value(c["rank_key"]) << "," << csv_value(c["subset"])
          << ",,," << c["l"] << "," << csv_value(item["id"]) << "," << csv_value(item["value"]) << "\n";
    }
  }
  for (const auto& c : doc["clm"]) {
    for (const auto& item : c["per_image"]) {
      out << "clm,,," << csv_value(c["basis"]) << "," << csv_value(c["rank_key"]) << "," << csv_value(c["subset"])
          << "," << csv_value(c["region"]) << "," << csv_value(c["region_value"]) << "," << c["l"] << ","
          << csv_value(item["id"]) << "," << csv_value(item["value"]) << "\n";
    }
  }
  for (const auto& g : doc["cgim"]) {
    for (const auto& item : g["scores"]) {
      out << "cgim," << g["type"] << "," << csv_value(g["axis"]) << ",,,,,,," << csv_value(item["name"]) << ","
          << csv_value(item["value"]) << "\n";
    }
  }
  return out.str();
}

}  // namespace concept_probe
