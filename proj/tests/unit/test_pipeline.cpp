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

// End-to-end library pipeline on the default planted dataset, cross-checked
// against the naive references.

#include <gtest/gtest.h>

#include <json.hpp>
#include <algorithm>

#include "concept_probe/bottleneck.hpp"
#include "concept_probe/cav.hpp"
#include "concept_probe/coam.hpp"
#include "concept_probe/errors.hpp"
#include "concept_probe/metrics.hpp"
#include "concept_probe/report.hpp"
#include "concept_probe/synth.hpp"
#include "oracle/reference.hpp"

namespace cp = concept_probe;
using nlohmann::json;

namespace {

struct Pipeline {
  cp::Dataset dataset;
  cp::ConceptBank bank;
  cp::BottleneckModel model;
};

const Pipeline& default_pipeline() {
  static const Pipeline p = [] {
    Pipeline out;
    const auto synth = cp::generate(cp::SynthSpec{});
    out.dataset.manifest = synth.manifest;
    out.dataset.records = synth.records;
    cp::BankConfig bc;
    bc.num_positive = 30;
    bc.num_negative = 30;
    out.bank = cp::build_bank(out.dataset, bc);
    const auto train = out.dataset.indices(cp::Split::kTrain);
    cp::Tensor acts({train.size(), out.bank.num_concepts()});
    std::vector<std::size_t> labels;
    for (std::size_t n = 0; n < train.size(); ++n) {
      const auto u = cp::project(out.bank, out.dataset.records[train[n]].post_gap.values());
      std::copy(u.values().begin(), u.values().end(), acts.row(n).begin());
      labels.push_back(out.dataset.records[train[n]].meta.class_label);
    }
    out.model = cp::train_classifier(acts, labels, out.dataset.manifest.num_classes, {});
    return out;
  }();
  return p;
}

}  // namespace

TEST(Pipeline, SuiteMatchesOracleRecomputation) {
  const auto& p = default_pipeline();
  cp::SuiteConfig cfg;
  cfg.tau = 0.5;
  const auto report = cp::evaluate_suite(p.dataset, p.bank, p.model, cfg);
  ASSERT_EQ(report.num_test, 80u);

  auto test = p.dataset.indices(cp::Split::kTest);
  std::sort(test.begin(), test.end(), [&](auto a, auto b) {
    return p.dataset.records[a].meta.image_id < p.dataset.records[b].meta.image_id;
  });
  const std::size_t L = p.bank.num_concepts();

  for (const auto& cell : report.cem) {
    double total = 0.0;
    std::size_t count = 0;
    for (auto i : test) {
      const auto& rec = p.dataset.records[i];
      const auto u = cp::project(p.bank, rec.post_gap.values());
      const auto pred = cp::predict(p.model, u.values()).class_index;
      if (cell.subset == cp::ImageSubset::kCorrectOnly && pred != rec.meta.class_label) continue;
      std::vector<double> scores(L);
      for (std::size_t j = 0; j < L; ++j) {
        const double w = p.model.theta.at(j, pred), v = u[j];
        scores[j] = cell.basis == cp::ScoreBasis::kTheta ? w : cell.basis == cp::ScoreBasis::kUhat ? v : w * v;
      }
      const auto ranking = cp::oracle::rank(scores, cell.key == cp::RankKey::kAbsolute);
      total += cp::oracle::cem(ranking, rec.meta.active_concepts(), cell.l);
      ++count;
    }
    ASSERT_TRUE(cell.mean.has_value());
    EXPECT_EQ(*cell.mean, total / static_cast<double>(count));
  }

  std::size_t clm_checked = 0;
  for (const auto& cell : report.clm) {
    if (cell.basis != cp::ScoreBasis::kThetaUhat || cell.subset != cp::ImageSubset::kEntireTest) continue;
    double total = 0.0;
    std::size_t defined = 0;
    for (auto i : test) {
      const auto& rec = p.dataset.records[i];
      const auto u = cp::project(p.bank, rec.post_gap.values());
      const auto pred = cp::predict(p.model, u.values()).class_index;
      std::vector<double> scores(L);
      for (std::size_t j = 0; j < L; ++j) scores[j] = static_cast<double>(p.model.theta.at(j, pred)) * u[j];
      const auto ranking = cp::oracle::rank(scores, cell.key == cp::RankKey::kAbsolute);
      std::size_t hits = 0, evaluated = 0;
      for (std::size_t s = 0; s < cell.l; ++s) {
        const auto j = ranking[s];
        const auto point = rec.meta.part_points.find(j);
        if (point == rec.meta.part_points.end()) continue;
        ++evaluated;
        const auto map = cp::upsample(cp::coam_slice(rec.pre_gap, p.bank.cavs.row(j)), rec.meta.image_rows,
                                      rec.meta.image_cols);
        const std::vector<float> flat(map.values().begin(), map.values().end());
        const bool in = cell.region.kind == cp::RegionKind::kTopAlpha
                            ? cp::oracle::in_top_alpha(flat, rec.meta.image_cols, point->second.row,
                                                       point->second.col, cell.region.value)
                            : cp::oracle::in_threshold(flat, rec.meta.image_cols, point->second.row,
                                                       point->second.col, cell.region.value);
        hits += in ? 1 : 0;
      }
      if (evaluated == 0) continue;
      total += static_cast<double>(hits) / static_cast<double>(evaluated);
      ++defined;
    }
    ASSERT_TRUE(cell.mean.has_value());
    EXPECT_EQ(*cell.mean, total / static_cast<double>(defined));
    ++clm_checked;
  }
  EXPECT_EQ(clm_checked, 2u * 4u * 3u);  // keys x regions x l
}

TEST(Pipeline, PlantedFloor) {
  const auto& p = default_pipeline();
  cp::SuiteConfig cfg;
  const auto report = cp::evaluate_suite(p.dataset, p.bank, p.model, cfg);
  EXPECT_GE(report.test_accuracy, 0.95);
  for (const auto& c : report.cem) {
    if (c.basis == cp::ScoreBasis::kThetaUhat && c.key == cp::RankKey::kAbsolute &&
        c.subset == cp::ImageSubset::kEntireTest && c.l == 1) {
      EXPECT_GE(*c.mean, 0.90);
    }
  }
  for (const auto& c : report.clm) {
    if (c.basis == cp::ScoreBasis::kThetaUhat && c.key == cp::RankKey::kAbsolute &&
        c.subset == cp::ImageSubset::kEntireTest && c.l == 1 && c.region.value == 1.0) {
      EXPECT_GE(*c.mean, 0.80);
    }
  }
  for (const auto& g : report.cgim) {
    if (g.type == 2 && g.axis == cp::CgimAxis::kClass) EXPECT_GE(*g.mean, 0.90);
  }
}

TEST(Pipeline, SuiteIsIndependentOfJobCount) {
  const auto& p = default_pipeline();
  cp::SuiteConfig cfg;
  cfg.tau = 0.3;
  const auto one = cp::report_to_json(cp::evaluate_suite(p.dataset, p.bank, p.model, cfg));
  cfg.jobs = 5;
  EXPECT_EQ(one, cp::report_to_json(cp::evaluate_suite(p.dataset, p.bank, p.model, cfg)));
}

TEST(Pipeline, ReportSectionsArePopulated) {
  const auto& p = default_pipeline();
  const auto doc = json::parse(cp::report_to_json(cp::evaluate_suite(p.dataset, p.bank, p.model, {})));
  EXPECT_EQ(doc["kind"], "concept-probe-report/1");
  EXPECT_EQ(doc["cem"].size(), 3u * 2u * 2u * 3u);
  EXPECT_EQ(doc["clm"].size(), 3u * 2u * 2u * 3u * 3u);
  EXPECT_EQ(doc["cgim"].size(), 6u);
  for (const auto& g : doc["cgim"]) {
    std::size_t total = 0;
    for (const auto& c : g["histogram"]["counts"]) total += c.get<std::size_t>();
    EXPECT_EQ(total + g["undefined"].get<std::size_t>(), g["scores"].size());
  }
  for (const auto& c : doc["cem"]) EXPECT_FALSE(c["mean"].is_null());

  const auto text = cp::format_text(doc.dump());
  EXPECT_NE(text.find("CEM"), std::string::npos);
  EXPECT_NE(text.find("CLM"), std::string::npos);
  EXPECT_NE(text.find("CGIM"), std::string::npos);
  const auto csv = cp::format_csv(doc.dump());
  EXPECT_EQ(csv.rfind("metric,type,axis", 0), 0u);
  EXPECT_GT(std::count(csv.begin(), csv.end(), '\n'), 1000);

  const auto merged = json::parse(cp::merge_reports({doc.dump(), doc.dump()}));
  EXPECT_EQ(merged["cem"].size(), 2 * doc["cem"].size());
  EXPECT_EQ(merged["test"], doc["test"]);
  EXPECT_THROW(cp::merge_reports({"not json"}), cp::DataError);
}
