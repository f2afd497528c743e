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

// Acceptance runner: one PASS/FAIL line per criterion, exit status 1 if any
// criterion fails. Optional criteria that need external assets print SKIP.

#include <json.hpp>
#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdlib>
#include <filesystem>
#include <functional>
#include <iomanip>
#include <iostream>
#include <map>
#include <random>
#include <sstream>
#include <string>
#include <vector>

#include "app.hpp"
#include "concept_probe/blob_io.hpp"
#include "concept_probe/bottleneck.hpp"
#include "concept_probe/coam.hpp"
#include "concept_probe/metrics.hpp"
#include "concept_probe/numerics.hpp"
#include "concept_probe/random.hpp"
#include "oracle/reference.hpp"
#include "support/oracle_check.hpp"
#include "support/temp_dir.hpp"

namespace cp = concept_probe;
namespace fs = std::filesystem;
using nlohmann::json;

namespace {

enum class Status { kPass, kFail, kSkip };

struct Outcome {
  Status status;
  std::string detail;
};

using Clock = std::chrono::steady_clock;

int g_failures = 0;

void criterion(const std::string& name, double budget_s, const std::function<Outcome()>& body) {
  const auto start = Clock::now();
  Outcome o;
  try {
    o = body();
  } catch (const std::exception& ex) {
    o = {Status::kFail, std::string("exception: ") + ex.what()};
  }
  const double secs = std::chrono::duration<double>(Clock::now() - start).count();
  if (o.status == Status::kPass && budget_s > 0 && secs > budget_s) {
    o = {Status::kFail, o.detail + "; over time budget " + std::to_string(budget_s) + " s"};
  }
  const char* tag = o.status == Status::kPass ? "PASS" : o.status == Status::kFail ? "FAIL" : "SKIP";
  if (o.status == Status::kFail) ++g_failures;
  std::ostringstream t;
  t << std::fixed << std::setprecision(2) << secs;
  std::cout << tag << "  " << name << "  [" << t.str() << " s]  " << o.detail << std::endl;
}

std::string fmt(double v, int precision = 4) {
  std::ostringstream out;
  out << std::setprecision(precision) << v;
  return out.str();
}

Outcome pass_if(bool ok, const std::string& detail) { return {ok ? Status::kPass : Status::kFail, detail}; }

int cli(std::vector<std::string> args) {
  std::ostringstream out, err;
  const int code = cp::cli::run(args, out, err);
  if (code != 0) throw std::runtime_error("concept-probe " + args[0] + " exited " + std::to_string(code) + ": " + err.str());
  return code;
}

// -- criteria ------------------------------------------------------------

Outcome gap_coam_identity() {
  std::mt19937_64 rng(2024);
  double worst = 0.0;
  for (int trial = 0; trial < 1000; ++trial) {
    const std::size_t H = 1 + cp::uniform_below(rng, 14), W = 1 + cp::uniform_below(rng, 14),
                      d = 1 + cp::uniform_below(rng, 64);
    cp::Tensor e({H, W, d}), c({1, d});
    for (auto& v : e.values()) v = static_cast<float>(cp::standard_normal(rng));
    for (auto& v : c.values()) v = static_cast<float>(cp::standard_normal(rng));
    const auto f = cp::coam_slice(e, c.row(0));
    double mean = 0.0;
    for (float v : f.values()) mean += v;
    mean /= static_cast<double>(H * W);
    const double expected = cp::project(c, cp::gap(e).values())[0] / static_cast<double>(d);
    worst = std::max(worst, std::fabs(mean - expected));
  }
  return pass_if(worst <= 1e-5, "1000 pairs, max |mean F - c.gap(E)/d| = " + fmt(worst, 3) + " (tol 1e-5)");
}

Outcome oracle_equivalence() {
  cp::testing::OracleTally tally;
  for (std::uint64_t seed = 0; seed < 200; ++seed) cp::testing::check_oracle_instance(1000 + seed, tally);
  std::string detail = "200 instances, " + std::to_string(tally.checks) + " comparisons, " +
                       std::to_string(tally.mismatches) + " mismatches, worst cosine gap " +
                       fmt(tally.worst_cosine_gap, 3);
  if (!tally.first_failure.empty()) detail += "; first: " + tally.first_failure;
  return pass_if(tally.mismatches == 0, detail);
}

Outcome gradient_check() {
  std::mt19937_64 rng(77);
  double worst = 0.0;
  for (int trial = 0; trial < 50; ++trial) {
    const std::size_t L = 1 + cp::uniform_below(rng, 8), K = 2 + cp::uniform_below(rng, 3),
                      N = 1 + cp::uniform_below(rng, 16);
    cp::Tensor acts({N, L});
    std::vector<std::vector<double>> u(N, std::vector<double>(L));
    std::vector<std::size_t> labels(N);
    for (std::size_t i = 0; i < N; ++i) {
      labels[i] = cp::uniform_below(rng, K);
      for (std::size_t j = 0; j < L; ++j) u[i][j] = acts.at(i, j) = static_cast<float>(cp::standard_normal(rng));
    }
    std::vector<double> params(L * K + K);
    for (auto& p : params) p = 0.5 * cp::standard_normal(rng);
    const double wd = 1e-4;
    const auto analytic = cp::classifier_objective(std::span<const double>(params.data(), L * K),
                                                   std::span<const double>(params.data() + L * K, K), acts, labels, wd);
    const auto numeric = cp::oracle::numeric_gradient(
        [&](const std::vector<double>& x) { return cp::oracle::softmax_xent(x, u, labels, K, wd); }, params, 1e-4);
    for (std::size_t p = 0; p < params.size(); ++p) {
      const double a = p < L * K ? analytic.grad_theta[p] : analytic.grad_bias[p - L * K];
      const double denom = std::max(1e-6, std::max(std::fabs(a), std::fabs(numeric[p])));
      worst = std::max(worst, std::fabs(a - numeric[p]) / denom);
    }
  }
  return pass_if(worst <= 1e-3, "50 instances, max relative error " + fmt(worst, 3) + " (tol 1e-3)");
}

Outcome invariance_suite() {
  std::mt19937_64 rng(4242);
  std::size_t cem_breaks = 0, clm_breaks = 0, cosine_breaks = 0, cases = 0;
  for (int trial = 0; trial < 300; ++trial) {
    ++cases;
    const std::size_t L = 1 + cp::uniform_below(rng, 16), K = 1 + cp::uniform_below(rng, 5);
    cp::BottleneckModel model;
    model.theta = cp::Tensor({L, K});
    model.bias = cp::Tensor({K});
    for (auto& v : model.theta.values()) v = static_cast<float>(cp::standard_normal(rng));
    std::vector<float> u(L);
    for (auto& v : u) v = static_cast<float>(cp::standard_normal(rng));
    std::vector<std::uint8_t> labels(L);
    for (auto& b : labels) b = static_cast<std::uint8_t>(cp::uniform_below(rng, 2));
    const std::size_t k = cp::uniform_below(rng, K);
    auto scaled = model;
    const float s = static_cast<float>(std::exp(3.0 * cp::standard_normal(rng)));
    for (std::size_t j = 0; j < L; ++j) scaled.theta.at(j, k) *= s;
    for (auto key : {cp::RankKey::kAbsolute, cp::RankKey::kSigned}) {
      const auto r1 = cp::rank_desc(cp::local_importance(model, u, k), key);
      const auto r2 = cp::rank_desc(cp::local_importance(scaled, u, k), key);
      for (std::size_t l = 1; l <= L; ++l) cem_breaks += cp::cem(r1, labels, l) != cp::cem(r2, labels, l);
    }

    // CLM over alpha in {1, 3, 6} with frequent ties.
    const std::size_t rows = 1 + cp::uniform_below(rng, 48), cols = 1 + cp::uniform_below(rng, 48);
    std::vector<cp::Tensor> maps;
    std::map<std::size_t, cp::PixelCoord> parts;
    for (std::size_t j = 0; j < L; ++j) {
      cp::Tensor m({rows, cols});
      for (auto& v : m.values()) v = static_cast<float>(cp::uniform_below(rng, 6));
      maps.push_back(std::move(m));
      if (cp::uniform_below(rng, 5) != 0) {
        parts[j] = {static_cast<std::int64_t>(cp::uniform_below(rng, rows)),
                    static_cast<std::int64_t>(cp::uniform_below(rng, cols))};
      }
    }
    const auto ranking = cp::rank_desc(cp::local_importance(model, u, k), cp::RankKey::kAbsolute);
    for (std::size_t l = 1; l <= L; ++l) {
      double previous = -1.0;
      for (double alpha : {1.0, 3.0, 6.0}) {
        const auto r = cp::clm_image(
            ranking, l, parts, [](std::size_t) { return true; },
            [&](std::size_t j) -> const cp::Tensor& { return maps[j]; }, cp::RegionSpec::top_alpha(alpha));
        if (!r.score) break;
        if (*r.score < previous) ++clm_breaks;
        previous = *r.score;
      }
    }

    // Cosine scale invariance.
    std::vector<double> a(L), b(L);
    for (std::size_t j = 0; j < L; ++j) {
      a[j] = cp::standard_normal(rng);
      b[j] = cp::standard_normal(rng);
    }
    std::vector<double> sb(b);
    const double factor = std::exp(3.0 * cp::standard_normal(rng));
    for (auto& v : sb) v *= factor;
    const auto c1 = cp::cosine(std::span<const double>(a), std::span<const double>(b));
    const auto c2 = cp::cosine(std::span<const double>(a), std::span<const double>(sb));
    const auto c3 = cp::cosine(std::span<const double>(b), std::span<const double>(a));
    if (!c1 || !c2 || !c3 || std::fabs(*c1 - *c2) > 1e-6 || *c1 != *c3) ++cosine_breaks;
  }
  return pass_if(cem_breaks == 0 && clm_breaks == 0 && cosine_breaks == 0,
                 std::to_string(cases) + " cases; CEM scaling violations " + std::to_string(cem_breaks) +
                     ", CLM alpha-monotonicity violations " + std::to_string(clm_breaks) +
                     ", cosine scale/symmetry violations " + std::to_string(cosine_breaks));
}

struct DeskRun {
  fs::path root;
  double accuracy = 0, cem = 0, clm = 0, cgim2 = 0;
  json oracle;
};

const json& find_cell(const json& cells, const std::function<bool(const json&)>& match) {
  for (const auto& c : cells) {
    if (match(c)) return c;
  }
  throw std::runtime_error("report cell not found");
}

void desk_pipeline(DeskRun& run) {
  const auto r = run.root;
  cp::write_file(r / "desk_spec.json", R"({"num_classes": 8, "num_concepts": 12, "depth": 16, "height": 7,
    "width": 7, "image_rows": 84, "image_cols": 84, "samples_per_class": 40, "noise_sigma": 0.1, "seed": 0})");
  cli({"synth-gen", "--spec", (r / "desk_spec.json").string(), "--out", (r / "data").string()});
  cli({"train-cavs", "--data", (r / "data").string(), "--out", (r / "bank").string(), "--np", "30", "--nn", "30",
       "--jobs", "1"});
  cli({"train-classifier", "--data", (r / "data").string(), "--bank", (r / "bank").string(), "--out",
       (r / "model").string(), "--jobs", "1"});
  cli({"evaluate", "--data", (r / "data").string(), "--bank", (r / "bank").string(), "--model",
       (r / "model").string(), "--out", (r / "report").string(), "--tau", "0.5", "--jobs", "1"});
  cli({"coam", "--data", (r / "data").string(), "--bank", (r / "bank").string(), "--image", "img_c003_s0035",
       "--out", (r / "maps").string(), "--jobs", "1"});
  const auto doc = json::parse(cp::read_file(r / "report" / "suite.json"));
  run.accuracy = doc["test"]["accuracy"].get<double>();
  run.cem = find_cell(doc["cem"], [](const json& c) {
              return c["basis"] == "theta_uhat" && c["rank_key"] == "absolute" && c["subset"] == "entire_test" && c["l"] == 1;
            })["mean"].get<double>();
  run.clm = find_cell(doc["clm"], [](const json& c) {
              return c["basis"] == "theta_uhat" && c["rank_key"] == "absolute" && c["subset"] == "entire_test" &&
                     c["l"] == 1 && c["region"] == "top_alpha" && c["region_value"] == 1.0;
            })["mean"].get<double>();
  run.cgim2 = find_cell(doc["cgim"], [](const json& c) { return c["type"] == 2 && c["axis"] == "class"; })["mean"]
                  .get<double>();
  run.oracle = json::parse(cp::read_file(r / "data" / "oracle.json"))["expected"];
}

std::map<std::string, std::string> snapshot(const fs::path& dir) {
  std::map<std::string, std::string> files;
  for (const auto& e : fs::recursive_directory_iterator(dir)) {
    if (e.is_regular_file()) files[fs::relative(e.path(), dir).string()] = cp::read_file(e.path());
  }
  return files;
}

Outcome determinism(const DeskRun& run) {
  std::vector<std::string> diverged;
  std::size_t files = 0, replays = 0;
  for (const char* stage : {"data", "bank", "model", "report", "maps"}) {
    const auto original = snapshot(run.root / stage);
    for (const char* jobs : {"1", "2", "7"}) {
      const fs::path target = run.root / "rerun" / (std::string(stage) + "_j" + jobs);
      cli({"rerun", "--config", (run.root / stage / "config.resolved.json").string(), "--out", target.string(),
           "--jobs", jobs});
      ++replays;
      const auto again = snapshot(target);
      files += again.size();
      if (again != original) diverged.push_back(std::string(stage) + " (jobs " + jobs + ")");
    }
  }
  std::string detail = std::to_string(replays) + " stage replays, " + std::to_string(files) + " files compared";
  if (!diverged.empty()) {
    detail += "; differing:";
    for (const auto& d : diverged) detail += " " + d;
  }
  return pass_if(diverged.empty(), detail);
}

Outcome optional_cub() {
  const char* root = std::getenv("CONCEPT_PROBE_CUB_DATA");
  if (!root || !*root) return {Status::kSkip, "set CONCEPT_PROBE_CUB_DATA to an exported CUB dataset to run"};
  cp::testing::TempDir work("cub");
  const std::string data = root;
  cli({"train-cavs", "--data", data, "--out", (work / "bank").string(), "--np", "100", "--nn", "100", "--lambda",
       "1"});
  cli({"train-classifier", "--data", data, "--bank", (work / "bank").string(), "--out", (work / "model").string()});
  cli({"evaluate", "--data", data, "--bank", (work / "bank").string(), "--model", (work / "model").string(),
       "--out", (work / "report").string(), "--l", "1"});
  const auto doc = json::parse(cp::read_file(work / "report" / "suite.json"));
  const double acc = 100.0 * doc["test"]["accuracy"].get<double>();
  const double cem = 100.0 * find_cell(doc["cem"], [](const json& c) {
                               return c["basis"] == "theta_uhat" && c["rank_key"] == "absolute" &&
                                      c["subset"] == "entire_test" && c["l"] == 1;
                             })["mean"].get<double>();
  const double clm = 100.0 * find_cell(doc["clm"], [](const json& c) {
                               return c["basis"] == "theta_uhat" && c["rank_key"] == "absolute" &&
                                      c["subset"] == "entire_test" && c["l"] == 1 && c["region_value"] == 1.0;
                             })["mean"].get<double>();
  std::optional<double> eye;
  for (const auto& s : find_cell(doc["cgim"], [](const json& c) { return c["type"] == 1 && c["axis"] == "concept"; })["scores"]) {
    std::string name = s["name"].get<std::string>();
    std::transform(name.begin(), name.end(), name.begin(), [](unsigned char ch) { return std::tolower(ch); });
    if (name.find("eye") != std::string::npos && name.find("black") != std::string::npos && !s["value"].is_null()) {
      eye = s["value"].get<double>();
    }
  }
  const bool ok = std::fabs(acc - 59.1) <= 3.0 && std::fabs(cem - 49.3) <= 5.0 && std::fabs(clm - 13.3) <= 5.0 &&
                  eye && *eye < 0.0;
  return pass_if(ok, "accuracy " + fmt(acc) + " (59.1 +/- 3), CEM " + fmt(cem) + " (49.3 +/- 5), CLM " + fmt(clm) +
                         " (13.3 +/- 5), black-eye CGIM1 " + (eye ? fmt(*eye) : std::string("n/a")) + " (< 0)");
}

}  // namespace

int main() {
  std::cout << "concept-probe acceptance suite" << std::endl;
  criterion("gap-coam-identity", 5.0, gap_coam_identity);
  criterion("oracle-equivalence", 30.0, oracle_equivalence);
  criterion("gradient-check", 10.0, gradient_check);

  cp::testing::TempDir scratch("acceptance");
  DeskRun desk;
  desk.root = scratch.path();
  bool desk_ok = false;
  criterion("planted-pipeline-floor", 120.0, [&]() -> Outcome {
    desk_pipeline(desk);
    desk_ok = true;
    const bool ok = desk.accuracy >= 0.95 && desk.cem >= 0.90 && desk.clm >= 0.80 && desk.cgim2 >= 0.90;
    std::string detail = "accuracy " + fmt(desk.accuracy) + " (>= 0.95), CEM(theta_uhat,l=1) " + fmt(desk.cem) +
                         " (>= 0.90), CLM(alpha=1,l=1) " + fmt(desk.clm) + " (>= 0.80), per-class CGIM2 " +
                         fmt(desk.cgim2) + " (>= 0.90)";
    const auto& o = desk.oracle;
    if (!o.is_null()) {
      detail += "; planted-bank oracle: CEM " + fmt(o["cem_uhat_absolute_l1"].get<double>()) + ", CLM " +
                fmt(o["clm_uhat_absolute_alpha1_l1"].get<double>()) + ", CGIM2 " +
                fmt(o["cgim2_per_class_mean"].get<double>());
    }
    return pass_if(ok, detail);
  });
  criterion("invariance-suite", 10.0, invariance_suite);
  criterion("determinism", 0.0, [&]() -> Outcome {
    if (!desk_ok) return {Status::kFail, "desk pipeline did not complete"};
    return determinism(desk);
  });
  criterion("cub-reproduction (optional)", 0.0, optional_cub);

  std::cout << (g_failures == 0 ? "acceptance: all required criteria passed" : "acceptance: FAILURES present")
            << std::endl;
  return g_failures == 0 ? 0 : 1;
}
