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

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <span>
#include <vector>

#include "concept_probe/cav.hpp"
#include "concept_probe/tensor.hpp"

namespace concept_probe {

struct ClassifierConfig {
  double learning_rate = 0.5;
  std::size_t epochs = 500;
  double weight_decay = 1e-4;
  bool backtracking = true;  // halve the step whenever the loss would increase
  std::uint64_t seed = 0;    // recorded only; zero initialization is deterministic
};

/// Linear head h(u) = theta^T u + b over concept activations.
struct BottleneckModel {
  Tensor theta;  // L x K
  Tensor bias;   // K
  ClassifierConfig config;
  double train_accuracy = 0.0;
  double test_accuracy = 0.0;
  std::vector<double> loss_history;  // per epoch, not serialized

  std::size_t num_concepts() const { return theta.dim(0); }
  std::size_t num_classes() const { return theta.dim(1); }
};

/// Concept activations u = C f; the SVM intercepts are not used.
Tensor project(const ConceptBank& bank, std::span<const float> post_gap);
Tensor project(const Tensor& cavs, std::span<const float> post_gap);

struct LossAndGradient {
  double loss = 0.0;
  std::vector<double> grad_theta;  // L x K row-major
  std::vector<double> grad_bias;   // K
};

/// Mean softmax cross-entropy plus weight_decay * |theta|^2 / 2.
/// `activations` is N x L; parameters are given in double precision.
LossAndGradient classifier_objective(std::span<const double> theta, std::span<const double> bias,
                                     const Tensor& activations, std::span<const std::size_t> labels,
                                     double weight_decay);

/// Full-batch gradient descent from zero initialization.
BottleneckModel train_classifier(const Tensor& activations, std::span<const std::size_t> labels,
                                 std::size_t num_classes, const ClassifierConfig& config);

struct Prediction {
  std::size_t class_index = 0;
  std::vector<double> probabilities;
};

/// Softmax over theta^T u + b; ties in the argmax go to the lowest index.
Prediction predict(const BottleneckModel& model, std::span<const float> activations);

double accuracy(const BottleneckModel& model, const Tensor& activations,
                std::span<const std::size_t> labels);

enum class ScoreBasis { kTheta, kUhat, kThetaUhat };

/// Per-concept local importance for class k: theta_jk * u_j, or either factor alone.
std::vector<double> local_importance(const BottleneckModel& model, std::span<const float> activations,
                                     std::size_t class_index, ScoreBasis basis = ScoreBasis::kThetaUhat);

void save_model(const std::filesystem::path& dir, const BottleneckModel& model);
BottleneckModel load_model(const std::filesystem::path& dir);

}  // namespace concept_probe
