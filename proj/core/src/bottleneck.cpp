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

#include "concept_probe/bottleneck.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include <json.hpp>

#include "concept_probe/blob_io.hpp"
#include "concept_probe/errors.hpp"
#include "concept_probe/numerics.hpp"

namespace concept_probe {
namespace fs = std::filesystem;
using nlohmann::json;

namespace {

// Numerically stable softmax of `logits` in place.
void softmax_inplace(std::vector<double>& logits) {
  const double peak = *std::max_element(logits.begin(), logits.end());
  double total = 0.0;
  for (double& z : logits) {
    z = std::exp(z - peak);
    total += z;
  }
  for (double& z : logits) z /= total;
}

constexpr std::size_t kMaxHalvings = 60;

}  // namespace

Tensor project(const Tensor& cavs, std::span<const float> post_gap) {
  if (cavs.rank() != 2 || cavs.dim(1) != post_gap.size()) {
    throw UsageError("project: feature length " + std::to_string(post_gap.size()) +
                     " does not match concept bank depth");
  }
  const std::size_t L = cavs.dim(0);
  Tensor out({L});
  for (std::size_t j = 0; j < L; ++j) out[j] = static_cast<float>(dot(cavs.row(j), post_gap));
  return out;
}

Tensor project(const ConceptBank& bank, std::span<const float> post_gap) {
  return project(bank.cavs, post_gap);
}

LossAndGradient classifier_objective(std::span<const double> theta, std::span<const double> bias,
                                     const Tensor& activations, std::span<const std::size_t> labels,
                                     double weight_decay) {
  const std::size_t N = activations.dim(0), L = activations.dim(1), K = bias.size();
  if (theta.size() != L * K || labels.size() != N) throw UsageError("classifier_objective: shape mismatch");
  LossAndGradient out;
  out.grad_theta.assign(L * K, 0.0);
  out.grad_bias.assign(K, 0.0);
  std::vector<double> logits(K);
  double loss = 0.0;
  for (std::size_t i = 0; i < N; ++i) {
    const auto u = activations.row(i);
    for (std::size_t k = 0; k < K; ++k) {
      double z = bias[k];
      for (std::size_t j = 0; j < L; ++j) z += theta[j * K + k] * u[j];
      logits[k] = z;
    }
    const double peak = *std::max_element(logits.begin(), logits.end());
    double total = 0.0;
    for (double z : logits) total += std::exp(z - peak);
    loss += std::log(total) + peak - logits[labels[i]];
    softmax_inplace(logits);
    logits[labels[i]] -= 1.0;
    for (std::size_t k = 0; k < K; ++k) {
      out.grad_bias[k] += logits[k];
      for (std::size_t j = 0; j < L; ++j) out.grad_theta[j * K + k] += logits[k] * u[j];
    }
  }
  const double inv_n = 1.0 / static_cast<double>(N);
  double reg = 0.0;
  for (std::size_t p = 0; p < L * K; ++p) {
    out.grad_theta[p] = out.grad_theta[p] * inv_n + weight_decay * theta[p];
    reg += theta[p] * theta[p];
  }
  for (double& g : out.grad_bias) g *= inv_n;
  out.loss = loss * inv_n + 0.5 * weight_decay * reg;
  return out;
}

BottleneckModel train_classifier(const Tensor& activations, std::span<const std::size_t> labels,
                                 std::size_t num_classes, const ClassifierConfig& config) {
  if (activations.rank() != 2 || activations.dim(0) != labels.size() || labels.empty()) {
    throw UsageError("train_classifier: need an N x L activation matrix with N labels");
  }
  for (auto y : labels) {
    if (y >= num_classes) throw UsageError("train_classifier: label " + std::to_string(y) + " out of range");
  }
  const std::size_t L = activations.dim(1), K = num_classes;
  std::vector<double> theta(L * K, 0.0), bias(K, 0.0);
  std::vector<double> next_theta(L * K), next_bias(K);

  BottleneckModel model;
  model.config = config;
  auto current = classifier_objective(theta, bias, activations, labels, config.weight_decay);
  double step = config.learning_rate;
  for (std::size_t epoch = 0; epoch < config.epochs; ++epoch) {
    if (!std::isfinite(current.loss)) throw NumericError("train_classifier: loss is not finite");
    model.loss_history.push_back(current.loss);
    LossAndGradient trial;
    bool accepted = false;
    for (std::size_t attempt = 0; attempt <= kMaxHalvings; ++attempt) {
      for (std::size_t p = 0; p < L * K; ++p) next_theta[p] = theta[p] - step * current.grad_theta[p];
      for (std::size_t k = 0; k < K; ++k) next_bias[k] = bias[k] - step * current.grad_bias[k];
      trial = classifier_objective(next_theta, next_bias, activations, labels, config.weight_decay);
      if (!config.backtracking) {
        accepted = true;
        break;
      }
      if (std::isfinite(trial.loss) && trial.loss <= current.loss) {
        accepted = true;
        break;
      }
      step *= 0.5;
    }
    if (!accepted) break;  // no descent step left at this precision
    if (!std::isfinite(trial.loss)) {
      throw NumericError("train_classifier: loss diverged at epoch " + std::to_string(epoch));
    }
    theta.swap(next_theta);
    bias.swap(next_bias);
    current = std::move(trial);
  }

  model.theta = Tensor({L, K});
  model.bias = Tensor({K});
  for (std::size_t p = 0; p < L * K; ++p) model.theta[p] = static_cast<float>(theta[p]);
  for (std::size_t k = 0; k < K; ++k) model.bias[k] = static_cast<float>(bias[k]);
  for (float v : model.theta.values()) {
    if (!std::isfinite(v)) throw NumericError("train_classifier: non-finite weights");
  }
  model.train_accuracy = accuracy(model, activations, labels);
  return model;
}

Prediction predict(const BottleneckModel& model, std::span<const float> activations) {
  const std::size_t L = model.num_concepts(), K = model.num_classes();
  if (activations.size() != L) throw UsageError("predict: activation length mismatch");
  std::vector<double> logits(K);
  for (std::size_t k = 0; k < K; ++k) {
    double z = model.bias[k];
    for (std::size_t j = 0; j < L; ++j) z += static_cast<double>(model.theta.at(j, k)) * activations[j];
    logits[k] = z;
  }
  Prediction p;
  p.class_index = static_cast<std::size_t>(std::max_element(logits.begin(), logits.end()) - logits.begin());
  softmax_inplace(logits);
  p.probabilities = std::move(logits);
  return p;
}

double accuracy(const BottleneckModel& model, const Tensor& activations,
                std::span<const std::size_t> labels) {
  if (labels.empty()) return 0.0;
  std::size_t correct = 0;
  for (std::size_t i = 0; i < labels.size(); ++i) {
    if (predict(model, activations.row(i)).class_index == labels[i]) ++correct;
  }
  return static_cast<double>(correct) / static_cast<double>(labels.size());
}

std::vector<double> local_importance(const BottleneckModel& model, std::span<const float> activations,
                                     std::size_t class_index, ScoreBasis basis) {
  const std::size_t L = model.num_concepts();
  if (class_index >= model.num_classes()) throw UsageError("local_importance: class out of range");
  if (activations.size() != L) throw UsageError("local_importance: activation length mismatch");
  std::vector<double> out(L);
  for (std::size_t j = 0; j < L; ++j) {
    const double weight = model.theta.at(j, class_index);
    const double value = activations[j];
    switch (basis) {
      case ScoreBasis::kTheta: out[j] = weight; break;
      case ScoreBasis::kUhat: out[j] = value; break;
      case ScoreBasis::kThetaUhat: out[j] = weight * value; break;
    }
  }
  return out;
}

void save_model(const fs::path& dir, const BottleneckModel& model) {
  fs::create_directories(dir);
  write_blob(dir / "theta.cxt", model.theta);
  write_blob(dir / "bias.cxt", model.bias);
  const auto& c = model.config;
  json doc;
  doc["num_concepts"] = model.num_concepts();
  doc["num_classes"] = model.num_classes();
  doc["config"] = {{"learning_rate", c.learning_rate}, {"epochs", c.epochs},
                   {"weight_decay", c.weight_decay},   {"backtracking", c.backtracking},
                   {"seed", c.seed}};
  doc["train_accuracy"] = model.train_accuracy;
  doc["test_accuracy"] = model.test_accuracy;
  doc["final_loss"] = model.loss_history.empty() ? json(nullptr) : json(model.loss_history.back());
  write_file(dir / "model.json", doc.dump(1) + "\n");
}

BottleneckModel load_model(const fs::path& dir) {
  for (const char* name : {"theta.cxt", "bias.cxt", "model.json"}) {
    if (!fs::exists(dir / name)) throw DataError("missing classifier file: " + (dir / name).string());
  }
  BottleneckModel model;
  model.theta = read_blob(dir / "theta.cxt");
  model.bias = read_blob(dir / "bias.cxt");
  if (model.theta.rank() != 2 || model.bias.rank() != 1 || model.bias.size() != model.theta.dim(1)) {
    throw DataError(dir.string() + ": classifier blobs have inconsistent shapes");
  }
  try {
    const json doc = json::parse(read_file(dir / "model.json"));
    const auto& c = doc.at("config");
    model.config.learning_rate = c.at("learning_rate").get<double>();
    model.config.epochs = c.at("epochs").get<std::size_t>();
    model.config.weight_decay = c.at("weight_decay").get<double>();
    model.config.backtracking = c.at("backtracking").get<bool>();
    model.config.seed = c.at("seed").get<std::uint64_t>();
    model.train_accuracy = doc.at("train_accuracy").get<double>();
    model.test_accuracy = doc.at("test_accuracy").get<double>();
  } catch (const json::exception& ex) {
    throw DataError((dir / "model.json").string() + ": " + ex.what());
  }
  return model;
}

}  // namespace concept_probe
