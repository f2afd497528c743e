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

#include "concept_probe/cav.hpp"

#include <cmath>
#include <limits>

#include <json.hpp>

#include "concept_probe/blob_io.hpp"
#include "concept_probe/errors.hpp"
#include "concept_probe/parallel.hpp"

namespace concept_probe {
namespace fs = std::filesystem;
using nlohmann::json;

namespace {

struct Sample {
  std::span<const float> x;
  double y;
};

double score(const std::vector<double>& w, double b, std::span<const float> x) {
  double s = b;
  for (std::size_t k = 0; k < w.size(); ++k) s += w[k] * x[k];
  return s;
}

double objective(const std::vector<double>& w, double b, const std::vector<Sample>& samples,
                 double lambda) {
  double reg = 0.0;
  for (double v : w) reg += v * v;
  double hinge = 0.0;
  for (const auto& s : samples) hinge += std::max(0.0, 1.0 - s.y * score(w, b, s.x));
  return 0.5 * reg + lambda * hinge;
}

}  // namespace

CavResult train_cav(std::span<const std::span<const float>> positives,
                    std::span<const std::span<const float>> negatives, const CavTrainConfig& config,
                    std::uint64_t seed) {
  if (positives.empty() || negatives.empty()) {
    throw UsageError("train_cav: both example sets must be non-empty");
  }
  const std::size_t d = positives.front().size();
  std::vector<Sample> samples;
  samples.reserve(positives.size() + negatives.size());
  for (auto x : positives) samples.push_back({x, 1.0});
  for (auto x : negatives) samples.push_back({x, -1.0});
  for (const auto& s : samples) {
    if (s.x.size() != d) throw UsageError("train_cav: embedding length mismatch");
  }

  std::vector<double> w(d, 0.0), grad(d);
  double b = 0.0;
  std::vector<double> best_w = w;
  double best_b = b;
  double best_obj = objective(w, b, samples, config.lambda);

  for (std::size_t t = 0; t < config.epochs; ++t) {
    const double step = config.initial_step / (1.0 + static_cast<double>(t));
    grad = w;
    double grad_b = 0.0;
    for (const auto& s : samples) {
      if (s.y * score(w, b, s.x) < 1.0) {
        for (std::size_t k = 0; k < d; ++k) grad[k] -= config.lambda * s.y * s.x[k];
        grad_b -= config.lambda * s.y;
      }
    }
    for (std::size_t k = 0; k < d; ++k) w[k] -= step * grad[k];
    b -= step * grad_b;

    const double obj = objective(w, b, samples, config.lambda);
    if (!std::isfinite(obj)) throw NumericError("train_cav: objective diverged at epoch " + std::to_string(t));
    if (obj < best_obj) {
      best_obj = obj;
      best_w = w;
      best_b = b;
    }
  }

  double mean_pos = 0.0, mean_neg = 0.0;
  for (const auto& s : samples) {
    const double proj = score(best_w, 0.0, s.x);
    (s.y > 0 ? mean_pos : mean_neg) += proj;
  }
  mean_pos /= static_cast<double>(positives.size());
  mean_neg /= static_cast<double>(negatives.size());
  if (mean_pos <= mean_neg) {
    for (double& v : best_w) v = -v;
    best_b = -best_b;
  }

  std::size_t correct = 0;
  double norm2 = 0.0;
  for (double v : best_w) norm2 += v * v;
  for (const auto& s : samples) {
    const bool predicted_positive = score(best_w, best_b, s.x) > 0.0;
    if (predicted_positive == (s.y > 0)) ++correct;
  }

  CavResult result;
  result.direction.assign(best_w.begin(), best_w.end());
  result.intercept = static_cast<float>(best_b);
  auto& m = result.meta;
  m.trained = true;
  m.num_positive = positives.size();
  m.num_negative = negatives.size();
  m.lambda = config.lambda;
  m.seed = seed;
  m.epochs = config.epochs;
  m.initial_step = config.initial_step;
  m.objective = objective(best_w, best_b, samples, config.lambda);
  m.train_accuracy = static_cast<double>(correct) / static_cast<double>(samples.size());
  m.degenerate = std::sqrt(norm2) < 1e-8 || m.train_accuracy <= 0.5;
  return result;
}

ConceptBank build_bank(const Dataset& dataset, const BankConfig& config) {
  const std::size_t L = dataset.manifest.num_concepts;
  const std::size_t d = dataset.manifest.depth;
  ConceptBank bank;
  bank.config = config;
  bank.cavs = Tensor({L, d});
  bank.intercepts = Tensor({L});
  bank.meta.assign(L, CavTrainMeta{});
  std::vector<std::string> failures(L);

  parallel_for(L, config.jobs, [&](std::size_t j) {
    const std::uint64_t seed = config.seed ^ static_cast<std::uint64_t>(j);
    ConceptSplit split;
    try {
      split = positive_negative_split(dataset.records, j, config.num_positive, config.num_negative, seed);
    } catch (const DataError& ex) {
      failures[j] = std::string("untrainable: ") + ex.what();
      bank.meta[j].seed = seed;
      return;
    }
    std::vector<std::span<const float>> pos, neg;
    for (auto i : split.positives) pos.push_back(dataset.records[i].post_gap.values());
    for (auto i : split.negatives) neg.push_back(dataset.records[i].post_gap.values());
    CavResult r = train_cav(pos, neg, config.svm, seed);
    if (config.normalize) {
      double n2 = 0.0;
      for (float v : r.direction) n2 += static_cast<double>(v) * v;
      const double n = std::sqrt(n2);
      if (n > 0.0) {
        for (float& v : r.direction) v = static_cast<float>(v / n);
        r.intercept = static_cast<float>(r.intercept / n);
      }
    }
    auto row = bank.cavs.row(j);
    std::copy(r.direction.begin(), r.direction.end(), row.begin());
    bank.intercepts[j] = r.intercept;
    bank.meta[j] = r.meta;
    if (r.meta.degenerate) failures[j] = "degenerate CAV (train accuracy " + std::to_string(r.meta.train_accuracy) + ")";
  });

  for (std::size_t j = 0; j < L; ++j) {
    if (!failures[j].empty()) {
      bank.warnings.push_back("concept " + std::to_string(j) + " (" + dataset.manifest.concept_names[j] +
                              "): " + failures[j]);
    }
  }
  return bank;
}

void save_bank(const fs::path& dir, const ConceptBank& bank) {
  fs::create_directories(dir);
  write_blob(dir / "cavs.cxt", bank.cavs);
  write_blob(dir / "intercepts.cxt", bank.intercepts);
  json doc;
  doc["num_concepts"] = bank.num_concepts();
  doc["depth"] = bank.depth();
  const auto& c = bank.config;
  doc["config"] = {{"num_positive", c.num_positive}, {"num_negative", c.num_negative},
                   {"seed", c.seed},                 {"normalize", c.normalize},
                   {"lambda", c.svm.lambda},         {"epochs", c.svm.epochs},
                   {"initial_step", c.svm.initial_step}};
  json concepts = json::array();
  for (std::size_t j = 0; j < bank.meta.size(); ++j) {
    const auto& m = bank.meta[j];
    concepts.push_back({{"index", j},
                        {"trained", m.trained},
                        {"degenerate", m.degenerate},
                        {"num_positive", m.num_positive},
                        {"num_negative", m.num_negative},
                        {"lambda", m.lambda},
                        {"seed", m.seed},
                        {"epochs", m.epochs},
                        {"initial_step", m.initial_step},
                        {"objective", m.objective},
                        {"train_accuracy", m.train_accuracy}});
  }
  doc["concepts"] = concepts;
  doc["warnings"] = bank.warnings;
  write_file(dir / "bank.json", doc.dump(1) + "\n");
}

ConceptBank load_bank(const fs::path& dir) {
  for (const char* name : {"cavs.cxt", "intercepts.cxt", "bank.json"}) {
    if (!fs::exists(dir / name)) throw DataError("missing concept bank file: " + (dir / name).string());
  }
  ConceptBank bank;
  bank.cavs = read_blob(dir / "cavs.cxt");
  bank.intercepts = read_blob(dir / "intercepts.cxt");
  if (bank.cavs.rank() != 2 || bank.intercepts.rank() != 1 || bank.intercepts.size() != bank.cavs.dim(0)) {
    throw DataError(dir.string() + ": concept bank blobs have inconsistent shapes");
  }
  try {
    const json doc = json::parse(read_file(dir / "bank.json"));
    const auto& c = doc.at("config");
    bank.config.num_positive = c.at("num_positive").get<std::size_t>();
    bank.config.num_negative = c.at("num_negative").get<std::size_t>();
    bank.config.seed = c.at("seed").get<std::uint64_t>();
    bank.config.normalize = c.at("normalize").get<bool>();
    bank.config.svm.lambda = c.at("lambda").get<double>();
    bank.config.svm.epochs = c.at("epochs").get<std::size_t>();
    bank.config.svm.initial_step = c.at("initial_step").get<double>();
    for (const auto& node : doc.at("concepts")) {
      CavTrainMeta m;
      m.trained = node.at("trained").get<bool>();
      m.degenerate = node.at("degenerate").get<bool>();
      m.num_positive = node.at("num_positive").get<std::size_t>();
      m.num_negative = node.at("num_negative").get<std::size_t>();
      m.lambda = node.at("lambda").get<double>();
      m.seed = node.at("seed").get<std::uint64_t>();
      m.epochs = node.at("epochs").get<std::size_t>();
      m.initial_step = node.at("initial_step").get<double>();
      m.objective = node.at("objective").get<double>();
      m.train_accuracy = node.at("train_accuracy").get<double>();
      bank.meta.push_back(m);
    }
    bank.warnings = doc.at("warnings").get<std::vector<std::string>>();
  } catch (const json::exception& ex) {
    throw DataError((dir / "bank.json").string() + ": " + ex.what());
  }
  if (bank.meta.size() != bank.num_concepts()) throw DataError(dir.string() + ": bank metadata count mismatch");
  return bank;
}

}  // namespace concept_probe
