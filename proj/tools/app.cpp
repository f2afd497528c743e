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

#include "app.hpp"

#include <algorithm>
#include <cstdlib>
#include <filesystem>
#include <map>
#include <optional>
#include <ostream>
#include <sstream>

#include <CLI11.hpp>
#include <json.hpp>

#include "concept_probe/blob_io.hpp"
#include "concept_probe/bottleneck.hpp"
#include "concept_probe/cav.hpp"
#include "concept_probe/coam.hpp"
#include "concept_probe/dataset.hpp"
#include "concept_probe/errors.hpp"
#include "concept_probe/image.hpp"
#include "concept_probe/metrics.hpp"
#include "concept_probe/parallel.hpp"
#include "concept_probe/report.hpp"
#include "concept_probe/synth.hpp"

namespace concept_probe::cli {
namespace fs = std::filesystem;
using nlohmann::json;

namespace {

constexpr const char* kResolvedConfig = "config.resolved.json";
constexpr const char* kSeedEnv = "CONCEPT_PROBE_SEED";

/// Resolved flag values of one stage, keyed by long flag name.
using Args = std::map<std::string, std::string>;

template <typename T>
std::string join(const std::vector<T>& values) {
  std::ostringstream out;
  for (std::size_t i = 0; i < values.size(); ++i) out << (i ? "," : "") << values[i];
  return out.str();
}

std::string number(double v) { return json(v).dump(); }

std::string absolute(const std::string& path) { return fs::absolute(path).lexically_normal().string(); }

std::uint64_t resolve_seed(const std::optional<std::uint64_t>& flag) {
  if (flag) return *flag;
  if (const char* env = std::getenv(kSeedEnv); env && *env) {
    try {
      return std::stoull(env);
    } catch (const std::exception&) {
      throw UsageError(std::string(kSeedEnv) + " is not an unsigned integer: " + env);
    }
  }
  return 0;
}

/// Merges this stage into `dir/config.resolved.json`.
void record_run(const fs::path& dir, const std::string& key, const std::string& command, const Args& args) {
  fs::create_directories(dir);
  json doc = json::object();
  const fs::path path = dir / kResolvedConfig;
  if (fs::exists(path)) {
    try {
      doc = json::parse(read_file(path));
    } catch (const json::parse_error&) {
      doc = json::object();
    }
  }
  json flags = json::object();
  for (const auto& [k, v] : args) flags[k] = v;
  doc["runs"][key] = {{"command", command}, {"args", flags}};
  write_file(path, doc.dump(1) + "\n");
}

void require_dir(const std::string& path, const char* what) {
  if (!fs::is_directory(path)) throw DataError(std::string("missing ") + what + " directory: " + path);
}

struct Loaded {
  Dataset dataset;
  ConceptBank bank;
  BottleneckModel model;
};

Loaded load_trained(const std::string& data, const std::string& bank, const std::string& model) {
  require_dir(data, "dataset");
  require_dir(bank, "concept bank");
  require_dir(model, "classifier");
  // Artifacts first so a missing one is reported before the dataset is read.
  Loaded l{Dataset{}, load_bank(bank), load_model(model)};
  l.dataset = load_dataset(data);
  return l;
}

void print_warnings(std::ostream& err, const std::vector<std::string>& warnings) {
  for (const auto& w : warnings) err << "warning: " << w << "\n";
}

std::string key_name(bool signed_rank) { return signed_rank ? "signed" : "absolute"; }

// ---------------------------------------------------------------------------

struct SynthOpts {
  std::string spec, out;
  std::optional<std::uint64_t> seed;
};

int cmd_synth(const SynthOpts& o, std::ostream& out) {
  const std::string text = read_file(o.spec);
  SynthSpec spec = parse_synth_spec(text);
  const bool spec_has_seed = json::parse(text).contains("seed");
  if (o.seed || !spec_has_seed) spec.seed = resolve_seed(o.seed);
  const SynthOutput generated = generate(spec);
  write_synth(o.out, generated);
  write_file(fs::path(o.out) / "synth_spec.json", synth_spec_to_json(spec));
  record_run(o.out, "synth-gen", "synth-gen", {{"spec", absolute(o.spec)}, {"seed", std::to_string(spec.seed)}});
  out << "wrote " << generated.records.size() << " records to " << o.out << "\n";
  return kOk;
}

struct CavOpts {
  std::string data, out;
  std::size_t np = 100, nn = 100, epochs = 500, jobs = 0;
  double lambda = 1.0, step = 1.0;
  std::optional<std::uint64_t> seed;
  bool normalize = false;
};

int cmd_train_cavs(const CavOpts& o, std::ostream& out, std::ostream& err) {
  require_dir(o.data, "dataset");
  const Dataset ds = load_dataset(o.data);
  print_warnings(err, ds.warnings);
  BankConfig cfg;
  cfg.num_positive = o.np;
  cfg.num_negative = o.nn;
  cfg.seed = resolve_seed(o.seed);
  cfg.normalize = o.normalize;
  cfg.jobs = o.jobs;
  cfg.svm.lambda = o.lambda;
  cfg.svm.epochs = o.epochs;
  cfg.svm.initial_step = o.step;
  const ConceptBank bank = build_bank(ds, cfg);
  print_warnings(err, bank.warnings);
  save_bank(o.out, bank);
  record_run(o.out, "train-cavs", "train-cavs",
             {{"data", absolute(o.data)},
              {"np", std::to_string(o.np)},
              {"nn", std::to_string(o.nn)},
              {"lambda", number(o.lambda)},
              {"seed", std::to_string(cfg.seed)},
              {"epochs", std::to_string(o.epochs)},
              {"step", number(o.step)},
              {"normalize-cavs", o.normalize ? "true" : "false"}});
  std::size_t trained = 0;
  for (const auto& m : bank.meta) trained += m.trained ? 1 : 0;
  out << "trained " << trained << " of " << bank.num_concepts() << " concepts into " << o.out << "\n";
  return kOk;
}

struct ClassifierOpts {
  std::string data, bank, out;
  double lr = 0.5, weight_decay = 1e-4;
  std::size_t epochs = 500, jobs = 0;
  bool no_weight_decay = false, fixed_step = false;
  std::optional<std::uint64_t> seed;
};

Tensor project_split(const Dataset& ds, const ConceptBank& bank, const std::vector<std::size_t>& idx,
                     std::vector<std::size_t>& labels) {
  Tensor u({std::max<std::size_t>(idx.size(), 1), bank.num_concepts()});
  labels.clear();
  for (std::size_t n = 0; n < idx.size(); ++n) {
    const auto& rec = ds.records[idx[n]];
    const Tensor row = project(bank, rec.post_gap.values());
    std::copy(row.values().begin(), row.values().end(), u.row(n).begin());
    labels.push_back(rec.meta.class_label);
  }
  return u;
}

int cmd_train_classifier(const ClassifierOpts& o, std::ostream& out) {
  require_dir(o.data, "dataset");
  require_dir(o.bank, "concept bank");
  const ConceptBank bank = load_bank(o.bank);
  const Dataset ds = load_dataset(o.data);
  if (bank.num_concepts() != ds.manifest.num_concepts || bank.depth() != ds.manifest.depth) {
    throw DataError("concept bank " + o.bank + " does not match dataset " + o.data);
  }
  ClassifierConfig cfg;
  cfg.learning_rate = o.lr;
  cfg.epochs = o.epochs;
  cfg.weight_decay = o.no_weight_decay ? 0.0 : o.weight_decay;
  cfg.backtracking = !o.fixed_step;
  cfg.seed = resolve_seed(o.seed);
  std::vector<std::size_t> train_labels, test_labels;
  const auto train_idx = ds.indices(Split::kTrain);
  const auto test_idx = ds.indices(Split::kTest);
  if (train_idx.empty()) throw DataError("dataset " + o.data + " has no training images");
  const Tensor train_u = project_split(ds, bank, train_idx, train_labels);
  BottleneckModel model = train_classifier(train_u, train_labels, ds.manifest.num_classes, cfg);
  if (!test_idx.empty()) {
    const Tensor test_u = project_split(ds, bank, test_idx, test_labels);
    model.test_accuracy = accuracy(model, test_u, test_labels);
  }
  save_model(o.out, model);
  record_run(o.out, "train-classifier", "train-classifier",
             {{"data", absolute(o.data)},
              {"bank", absolute(o.bank)},
              {"lr", number(o.lr)},
              {"epochs", std::to_string(o.epochs)},
              {"weight-decay", number(cfg.weight_decay)},
              {"fixed-step", o.fixed_step ? "true" : "false"},
              {"seed", std::to_string(cfg.seed)}});
  out << "train accuracy " << model.train_accuracy << ", test accuracy " << model.test_accuracy << "\n";
  return kOk;
}

struct CoamOpts {
  std::string data, bank, image, mode = "coloured", out;
  std::vector<std::size_t> concepts;
  double beta = 0.4, threshold = 0.5;
  std::size_t jobs = 0;
};

int cmd_coam(const CoamOpts& o, std::ostream& out, std::ostream& err) {
  require_dir(o.data, "dataset");
  require_dir(o.bank, "concept bank");
  const ConceptBank bank = load_bank(o.bank);
  const Dataset ds = load_dataset(o.data);
  if (bank.depth() != ds.manifest.depth) throw DataError("concept bank depth does not match the dataset");
  const auto it = std::find_if(ds.records.begin(), ds.records.end(),
                               [&](const FeatureRecord& r) { return r.meta.image_id == o.image; });
  if (it == ds.records.end()) throw DataError("image " + o.image + " not found in " + o.data);
  const FeatureRecord& rec = *it;
  RenderOptions opts;
  if (o.mode == "coloured" || o.mode == "colored") {
    opts.mode = RenderMode::kColoured;
  } else if (o.mode == "binary") {
    opts.mode = RenderMode::kBinary;
  } else {
    throw UsageError("--mode must be coloured or binary");
  }
  opts.beta = o.beta;
  opts.threshold = o.threshold;
  std::vector<std::size_t> concepts = o.concepts;
  if (concepts.empty()) {
    for (std::size_t j = 0; j < bank.num_concepts(); ++j) concepts.push_back(j);
  }
  for (auto j : concepts) {
    if (j >= bank.num_concepts()) throw UsageError("concept index " + std::to_string(j) + " out of range");
  }

  RgbImage canvas(rec.meta.image_rows, rec.meta.image_cols, 128);
  if (rec.meta.image_path) {
    canvas = read_png(fs::path(o.data) / *rec.meta.image_path);
    if (canvas.rows != rec.meta.image_rows || canvas.cols != rec.meta.image_cols) {
      throw DataError("image " + o.image + ": raster size differs from the manifest image_size");
    }
  } else {
    err << "warning: image " << o.image << " has no raw image; rendering over a grey canvas\n";
  }

  const Tensor maps = coam(rec.pre_gap, bank.cavs);
  write_blob(fs::path(o.out) / (o.image + ".coam.cxt"), maps);
  const std::string mode_name = opts.mode == RenderMode::kColoured ? "coloured" : "binary";
  std::vector<std::uint8_t> degenerate(concepts.size(), 0);
  fs::create_directories(o.out);
  parallel_for(concepts.size(), o.jobs, [&](std::size_t n) {
    const std::size_t j = concepts[n];
    const Tensor raw = coam_slice(rec.pre_gap, bank.cavs.row(j));
    const Tensor up = upsample(raw, rec.meta.image_rows, rec.meta.image_cols);
    const RenderResult r = render(up, canvas, opts);
    degenerate[n] = r.degenerate ? 1 : 0;
    write_png(fs::path(o.out) / (o.image + ".concept" + std::to_string(j) + "." + mode_name + ".png"), r.image);
  });
  for (std::size_t n = 0; n < concepts.size(); ++n) {
    if (degenerate[n]) err << "warning: concept " << concepts[n] << " has a constant activation map\n";
  }
  record_run(o.out, "coam:" + o.image + ":" + mode_name, "coam",
             {{"data", absolute(o.data)},
              {"bank", absolute(o.bank)},
              {"image", o.image},
              {"concepts", join(concepts)},
              {"mode", mode_name},
              {"beta", number(o.beta)},
              {"threshold", number(o.threshold)}});
  out << "rendered " << concepts.size() << " concept maps for " << o.image << " into " << o.out << "\n";
  return kOk;
}

struct MetricOpts {
  std::string data, bank, model, out;
  std::size_t jobs = 0;
  // cgim
  int type = 1;
  std::string axis = "concept";
  // cem / clm / evaluate
  std::vector<std::size_t> l_values{1, 3, 5};
  std::vector<double> alphas{1.0, 3.0, 6.0};
  std::optional<double> tau;
  std::string basis = "theta_uhat";
  std::string subset = "entire";
  bool signed_rank = false;
};

int write_metric_report(const std::string& command, const std::string& file_stem, const MetricOpts& o,
                        const SuiteConfig& cfg, const Args& extra, std::ostream& out) {
  const Loaded l = load_trained(o.data, o.bank, o.model);
  const SuiteReport report = evaluate_suite(l.dataset, l.bank, l.model, cfg);
  write_file(fs::path(o.out) / (file_stem + ".json"), report_to_json(report));
  Args args{{"data", absolute(o.data)}, {"bank", absolute(o.bank)}, {"model", absolute(o.model)}};
  args.insert(extra.begin(), extra.end());
  record_run(o.out, file_stem, command, args);
  out << "wrote " << (fs::path(o.out) / (file_stem + ".json")).string() << "\n";
  return kOk;
}

int cmd_cgim(const MetricOpts& o, std::ostream& out) {
  if (o.type < 1 || o.type > 3) throw UsageError("--type must be 1, 2 or 3");
  SuiteConfig cfg;
  cfg.include_cem = cfg.include_clm = false;
  cfg.cgim_types = {o.type};
  cfg.cgim_axes = {parse_axis(o.axis)};
  cfg.jobs = o.jobs;
  return write_metric_report("cgim", "cgim" + std::to_string(o.type) + "_" + o.axis, o, cfg,
                             {{"type", std::to_string(o.type)}, {"axis", o.axis}}, out);
}

int cmd_cem(const MetricOpts& o, std::ostream& out) {
  SuiteConfig cfg;
  cfg.include_clm = false;
  cfg.cgim_types.clear();
  cfg.l_values = o.l_values;
  cfg.bases = {parse_basis(o.basis)};
  cfg.subsets = {parse_subset(o.subset)};
  cfg.rank_keys = {o.signed_rank ? RankKey::kSigned : RankKey::kAbsolute};
  cfg.jobs = o.jobs;
  const std::string stem = "cem_" + to_string(cfg.bases[0]) + "_" + to_string(cfg.subsets[0]) + "_" + key_name(o.signed_rank);
  return write_metric_report("cem", stem, o, cfg,
                             {{"l", join(o.l_values)},
                              {"basis", to_string(cfg.bases[0])},
                              {"subset", to_string(cfg.subsets[0])},
                              {"signed-rank", o.signed_rank ? "true" : "false"}},
                             out);
}

int cmd_clm(const MetricOpts& o, std::ostream& out) {
  SuiteConfig cfg;
  cfg.include_cem = false;
  cfg.cgim_types.clear();
  cfg.l_values = o.l_values;
  cfg.alphas = o.alphas;
  cfg.tau = o.tau;
  cfg.bases = {parse_basis(o.basis)};
  cfg.subsets = {parse_subset(o.subset)};
  cfg.rank_keys = {o.signed_rank ? RankKey::kSigned : RankKey::kAbsolute};
  cfg.jobs = o.jobs;
  const std::string stem = "clm_" + to_string(cfg.bases[0]) + "_" + to_string(cfg.subsets[0]) + "_" + key_name(o.signed_rank);
  Args extra{{"l", join(o.l_values)},
             {"alpha", join(o.alphas)},
             {"basis", to_string(cfg.bases[0])},
             {"subset", to_string(cfg.subsets[0])},
             {"signed-rank", o.signed_rank ? "true" : "false"}};
  if (o.tau) extra["tau"] = number(*o.tau);
  return write_metric_report("clm", stem, o, cfg, extra, out);
}

int cmd_evaluate(const MetricOpts& o, std::ostream& out) {
  SuiteConfig cfg;
  cfg.l_values = o.l_values;
  cfg.alphas = o.alphas;
  cfg.tau = o.tau;
  cfg.jobs = o.jobs;
  Args extra{{"l", join(o.l_values)}, {"alpha", join(o.alphas)}};
  if (o.tau) extra["tau"] = number(*o.tau);
  return write_metric_report("evaluate", "suite", o, cfg, extra, out);
}

struct ReportOpts {
  std::string in, format = "text", out;
};

int cmd_report(const ReportOpts& o, std::ostream& out) {
  require_dir(o.in, "report");
  std::vector<fs::path> files;
  for (const auto& entry : fs::directory_iterator(o.in)) {
    if (entry.path().extension() == ".json" && entry.path().filename() != kResolvedConfig) {
      files.push_back(entry.path());
    }
  }
  std::sort(files.begin(), files.end());
  if (files.empty()) throw DataError("no metric reports found in " + o.in);
  std::vector<std::string> docs;
  for (const auto& f : files) docs.push_back(read_file(f));
  const std::string merged = merge_reports(docs);
  std::string rendered;
  if (o.format == "json") {
    rendered = merged;
  } else if (o.format == "text") {
    rendered = format_text(merged);
  } else if (o.format == "csv") {
    rendered = format_csv(merged);
  } else {
    throw UsageError("--format must be json, text or csv");
  }
  if (o.out.empty()) {
    out << rendered;
  } else {
    write_file(o.out, rendered);
    const fs::path parent = fs::absolute(o.out).parent_path();
    record_run(parent, "report:" + fs::path(o.out).filename().string(), "report",
               {{"in", absolute(o.in)}, {"format", o.format}});
  }
  return kOk;
}

struct RerunOpts {
  std::string config, out;
  std::optional<std::size_t> jobs;
};

int run_parsed(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

int cmd_rerun(const RerunOpts& o, std::ostream& out, std::ostream& err) {
  if (!fs::exists(o.config)) throw DataError("missing resolved config: " + o.config);
  json doc;
  try {
    doc = json::parse(read_file(o.config));
  } catch (const json::parse_error& ex) {
    throw DataError(o.config + ": " + ex.what());
  }
  const std::string target = o.out.empty() ? fs::absolute(o.config).parent_path().string() : o.out;
  if (!doc.contains("runs")) throw DataError(o.config + ": no recorded runs");
  for (const auto& [key, run] : doc["runs"].items()) {
    const std::string command = run.at("command").get<std::string>();
    std::vector<std::string> argv{command};
    for (const auto& [flag, value] : run.at("args").items()) {
      const std::string v = value.get<std::string>();
      if (v == "true") {
        argv.push_back("--" + flag);
      } else if (v != "false") {
        argv.push_back("--" + flag);
        argv.push_back(v);
      }
    }
    if (command == "report") {
      argv.push_back("--out");
      argv.push_back((fs::path(target) / key.substr(key.find(':') + 1)).string());
    } else {
      argv.push_back("--out");
      argv.push_back(target);
    }
    if (o.jobs && command != "report" && command != "synth-gen") {
      argv.push_back("--jobs");
      argv.push_back(std::to_string(*o.jobs));
    }
    const int code = run_parsed(argv, out, err);
    if (code != kOk) return code;
  }
  return kOk;
}

int run_parsed(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  CLI::App app{"Concept bottleneck probing toolkit: CAVs, concept activation maps, CGIM/CEM/CLM metrics",
               "concept-probe"};
  app.require_subcommand(1);

  SynthOpts synth;
  auto* s_synth = app.add_subcommand("synth-gen", "Generate a planted-concept synthetic dataset");
  s_synth->add_option("--spec", synth.spec, "Synthetic spec JSON")->required()->check(CLI::ExistingFile);
  s_synth->add_option("--out", synth.out, "Output dataset directory")->required();
  s_synth->add_option("--seed", synth.seed, "Overrides the spec seed");

  CavOpts cav;
  auto* s_cav = app.add_subcommand("train-cavs", "Train one linear SVM per concept and write the concept bank");
  s_cav->add_option("--data", cav.data, "Dataset directory")->required();
  s_cav->add_option("--out", cav.out, "Concept bank directory")->required();
  s_cav->add_option("--np", cav.np, "Positive examples per concept")->capture_default_str();
  s_cav->add_option("--nn", cav.nn, "Negative examples per concept")->capture_default_str();
  s_cav->add_option("--lambda", cav.lambda, "Hinge-loss weight")->capture_default_str()->check(CLI::PositiveNumber);
  s_cav->add_option("--seed", cav.seed, "Sampling seed (falls back to CONCEPT_PROBE_SEED, then 0)");
  s_cav->add_option("--epochs", cav.epochs, "Sub-gradient iterations")->capture_default_str();
  s_cav->add_option("--step", cav.step, "Initial step eta_0")->capture_default_str()->check(CLI::PositiveNumber);
  s_cav->add_flag("--normalize-cavs", cav.normalize, "Rescale each CAV to unit length");
  s_cav->add_option("--jobs", cav.jobs, "Worker threads (0 = all cores)");

  ClassifierOpts clf;
  auto* s_clf = app.add_subcommand("train-classifier", "Train the linear head on projected concept activations");
  s_clf->add_option("--data", clf.data, "Dataset directory")->required();
  s_clf->add_option("--bank", clf.bank, "Concept bank directory")->required();
  s_clf->add_option("--out", clf.out, "Model directory")->required();
  s_clf->add_option("--lr", clf.lr, "Initial learning rate")->capture_default_str()->check(CLI::PositiveNumber);
  s_clf->add_option("--epochs", clf.epochs, "Full-batch epochs")->capture_default_str();
  s_clf->add_option("--weight-decay", clf.weight_decay, "L2 penalty on theta")->capture_default_str();
  s_clf->add_flag("--no-weight-decay", clf.no_weight_decay, "Disable the L2 penalty");
  s_clf->add_flag("--fixed-step", clf.fixed_step, "Plain fixed-rate descent without step halving");
  s_clf->add_option("--seed", clf.seed, "Recorded seed");
  s_clf->add_option("--jobs", clf.jobs, "Accepted for uniformity; training is single-threaded");

  CoamOpts cm;
  auto* s_coam = app.add_subcommand("coam", "Compute and render concept activation maps for one image");
  s_coam->add_option("--data", cm.data, "Dataset directory")->required();
  s_coam->add_option("--bank", cm.bank, "Concept bank directory")->required();
  s_coam->add_option("--image", cm.image, "Image id")->required();
  s_coam->add_option("--concepts", cm.concepts, "Concept indices (default: all)")->delimiter(',');
  s_coam->add_option("--mode", cm.mode, "coloured or binary")->capture_default_str();
  s_coam->add_option("--beta", cm.beta, "Heatmap opacity")->capture_default_str();
  s_coam->add_option("--threshold", cm.threshold, "Binary mask threshold on the normalized map")->capture_default_str();
  s_coam->add_option("--out", cm.out, "Output directory")->required();
  s_coam->add_option("--jobs", cm.jobs, "Worker threads (0 = all cores)");

  MetricOpts mo;
  auto add_common = [&](CLI::App* sub) {
    sub->add_option("--data", mo.data, "Dataset directory")->required();
    sub->add_option("--bank", mo.bank, "Concept bank directory")->required();
    sub->add_option("--model", mo.model, "Model directory")->required();
    sub->add_option("--out", mo.out, "Report directory")->required();
    sub->add_option("--jobs", mo.jobs, "Worker threads (0 = all cores)");
  };
  auto* s_cgim = app.add_subcommand("cgim", "Concept global importance metric");
  add_common(s_cgim);
  s_cgim->add_option("--type", mo.type, "1 (theta), 2 (average concepts), 3 (theta x average)")->capture_default_str();
  s_cgim->add_option("--axis", mo.axis, "concept or class")->capture_default_str();

  auto* s_cem = app.add_subcommand("cem", "Concept existence metric");
  add_common(s_cem);
  s_cem->add_option("--l", mo.l_values, "Top-l values")->delimiter(',')->capture_default_str();
  s_cem->add_option("--basis", mo.basis, "theta, uhat or theta_uhat")->capture_default_str();
  s_cem->add_option("--subset", mo.subset, "entire or correct")->capture_default_str();
  s_cem->add_flag("--signed-rank", mo.signed_rank, "Rank by signed score instead of magnitude");

  auto* s_clm = app.add_subcommand("clm", "Concept location metric");
  add_common(s_clm);
  s_clm->add_option("--alpha", mo.alphas, "Region sizes, in twelfths of the image")->delimiter(',')->capture_default_str();
  s_clm->add_option("--l", mo.l_values, "Top-l values")->delimiter(',')->capture_default_str();
  s_clm->add_option("--tau", mo.tau, "Also score the threshold region at this level");
  s_clm->add_option("--basis", mo.basis, "theta, uhat or theta_uhat")->capture_default_str();
  s_clm->add_option("--subset", mo.subset, "entire or correct")->capture_default_str();
  s_clm->add_flag("--signed-rank", mo.signed_rank, "Rank by signed score instead of magnitude");

  auto* s_eval = app.add_subcommand("evaluate", "Full metric suite (all bases, rank keys, subsets)");
  add_common(s_eval);
  s_eval->add_option("--l", mo.l_values, "Top-l values")->delimiter(',')->capture_default_str();
  s_eval->add_option("--alpha", mo.alphas, "CLM region sizes")->delimiter(',')->capture_default_str();
  s_eval->add_option("--tau", mo.tau, "Also score threshold regions at this level");

  ReportOpts ro;
  auto* s_report = app.add_subcommand("report", "Consolidate metric reports");
  s_report->add_option("--in", ro.in, "Report directory")->required();
  s_report->add_option("--format", ro.format, "json, text or csv")->capture_default_str();
  s_report->add_option("--out", ro.out, "Write to a file instead of stdout");

  RerunOpts rr;
  auto* s_rerun = app.add_subcommand("rerun", "Replay every stage recorded in a config.resolved.json");
  s_rerun->add_option("--config", rr.config, "Resolved config file")->required();
  s_rerun->add_option("--out", rr.out, "Output directory (default: the config's directory)");
  s_rerun->add_option("--jobs", rr.jobs, "Override worker threads");

  std::vector<std::string> reversed(args.rbegin(), args.rend());
  try {
    app.parse(reversed);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e, out, err);
    return code == 0 ? kOk : kUsage;
  }

  if (s_synth->parsed()) return cmd_synth(synth, out);
  if (s_cav->parsed()) return cmd_train_cavs(cav, out, err);
  if (s_clf->parsed()) return cmd_train_classifier(clf, out);
  if (s_coam->parsed()) return cmd_coam(cm, out, err);
  if (s_cgim->parsed()) return cmd_cgim(mo, out);
  if (s_cem->parsed()) return cmd_cem(mo, out);
  if (s_clm->parsed()) return cmd_clm(mo, out);
  if (s_eval->parsed()) return cmd_evaluate(mo, out);
  if (s_report->parsed()) return cmd_report(ro, out);
  if (s_rerun->parsed()) return cmd_rerun(rr, out, err);
  return kUsage;
}

}  // namespace

int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  try {
    return run_parsed(args, out, err);
  } catch (const UsageError& e) {
    err << "error: " << e.what() << "\n";
    return kUsage;
  } catch (const DataError& e) {
    err << "error: " << e.what() << "\n";
    return kData;
  } catch (const NumericError& e) {
    err << "error: " << e.what() << "\n";
    return kNumeric;
  } catch (const fs::filesystem_error& e) {
    err << "error: " << e.what() << "\n";
    return kData;
  }
}

}  // namespace concept_probe::cli
