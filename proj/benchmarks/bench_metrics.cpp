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

#include <numeric>
#include <random>

#include "concept_probe/metrics.hpp"
#include "concept_probe/numerics.hpp"
#include "concept_probe/random.hpp"

namespace cp = concept_probe;

namespace {

cp::Tensor random_map(std::size_t rows, std::size_t cols, std::uint64_t seed) {
  cp::Tensor t({rows, cols});
  std::mt19937_64 rng(seed);
  for (auto& v : t.values()) v = static_cast<float>(cp::uniform_unit(rng));
  return t;
}

// One CLM membership test on a full-resolution map; alpha = 1 and 12.
void BM_RegionTopAlpha(benchmark::State& state) {
  const auto side = static_cast<std::size_t>(state.range(0));
  const auto map = random_map(side, side, 7);
  const cp::PixelCoord p{static_cast<std::int64_t>(side / 2), static_cast<std::int64_t>(side / 3)};
  const auto region = cp::RegionSpec::top_alpha(static_cast<double>(state.range(1)));
  for (auto _ : state) benchmark::DoNotOptimize(cp::region_contains(map, p, region));
}
BENCHMARK(BM_RegionTopAlpha)->Args({224, 1})->Args({224, 12})->Args({448, 1});

void BM_RegionThreshold(benchmark::State& state) {
  const auto side = static_cast<std::size_t>(state.range(0));
  const auto map = random_map(side, side, 8);
  const cp::PixelCoord p{static_cast<std::int64_t>(side / 2), static_cast<std::int64_t>(side / 3)};
  for (auto _ : state) benchmark::DoNotOptimize(cp::region_contains(map, p, cp::RegionSpec::threshold(0.5)));
}
BENCHMARK(BM_RegionThreshold)->Arg(224)->Arg(448);

void BM_RankDesc(benchmark::State& state) {
  const auto l = static_cast<std::size_t>(state.range(0));
  std::vector<double> scores(l);
  std::mt19937_64 rng(9);
  for (auto& s : scores) s = cp::standard_normal(rng);
  for (auto _ : state) benchmark::DoNotOptimize(cp::rank_desc(std::span<const double>(scores), cp::RankKey::kAbsolute));
}
BENCHMARK(BM_RankDesc)->Arg(112)->Arg(312);

}  // namespace
