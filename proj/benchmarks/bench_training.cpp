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

#include <benchmark/benchmark.h>

#include <random>

#include "concept_probe/bottleneck.hpp"
#include "concept_probe/cav.hpp"
#include "concept_probe/random.hpp"

namespace cp = concept_probe;

namespace {

// N_p = N_n = 100 in d dimensions, separable along the first axis.
void BM_TrainCav(benchmark::State& state) {
  const auto d = static_cast<std::size_t>(state.range(0));
  std::mt19937_64 rng(11);
  std::vector<std::vector<float>> pos(100, std::vector<float>(d)), neg(100, std::vector<float>(d));
  for (auto* set : {&pos, &neg}) {
    for (auto& x : *set) {
      for (auto& v : x) v = static_cast<float>(cp::standard_normal(rng));
      x[0] += set == &pos ? 3.0f : -3.0f;
    }
  }
  std::vector<std::span<const float>> p(pos.begin(), pos.end()), n(neg.begin(), neg.end());
  cp::CavTrainConfig cfg;
  cfg.epochs = static_cast<std::size_t>(state.range(1));
  for (auto _ : state) benchmark::DoNotOptimize(cp::train_cav(p, n, cfg));
}
BENCHMARK(BM_TrainCav)->Args({16, 500})->Args({512, 500})->Unit(benchmark::kMillisecond);

void BM_TrainClassifier(benchmark::State& state) {
  const std::size_t l = 112, k = 200, n = 1200;
  cp::Tensor u({n, l});
  std::vector<std::size_t> labels(n);
  std::mt19937_64 rng(12);
  for (std::size_t i = 0; i < n; ++i) {
    labels[i] = i % k;
    for (std::size_t j = 0; j < l; ++j) u.at(i, j) = static_cast<float>(cp::standard_normal(rng) + (j % k == labels[i]));
  }
  cp::ClassifierConfig cfg;
  cfg.epochs = static_cast<std::size_t>(state.range(0));
  for (auto _ : state) benchmark::DoNotOptimize(cp::train_classifier(u, labels, k, cfg));
}
BENCHMARK(BM_TrainClassifier)->Arg(20)->Unit(benchmark::kMillisecond);

}  // namespace
