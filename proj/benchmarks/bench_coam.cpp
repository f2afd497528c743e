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

#include "concept_probe/coam.hpp"
#include "concept_probe/random.hpp"

namespace cp = concept_probe;

namespace {

cp::Tensor random_tensor(std::vector<std::size_t> dims, std::uint64_t seed) {
  cp::Tensor t(std::move(dims));
  std::mt19937_64 rng(seed);
  for (auto& v : t.values()) v = static_cast<float>(cp::standard_normal(rng));
  return t;
}

// CUB-sized feature maps: 7x7x512, L concepts.
void BM_Coam(benchmark::State& state) {
  const auto l = static_cast<std::size_t>(state.range(0));
  const auto pre = random_tensor({7, 7, 512}, 1);
  const auto cavs = random_tensor({l, 512}, 2);
  for (auto _ : state) benchmark::DoNotOptimize(cp::coam(pre, cavs));
  state.SetItemsProcessed(state.iterations() * static_cast<std::int64_t>(l));
}
BENCHMARK(BM_Coam)->Arg(12)->Arg(112);

void BM_Upsample(benchmark::State& state) {
  const auto side = static_cast<std::size_t>(state.range(0));
  const auto raw = random_tensor({7, 7}, 3);
  for (auto _ : state) benchmark::DoNotOptimize(cp::upsample(raw, side, side));
  state.SetItemsProcessed(state.iterations() * static_cast<std::int64_t>(side * side));
}
BENCHMARK(BM_Upsample)->Arg(84)->Arg(224)->Arg(448);

}  // namespace
