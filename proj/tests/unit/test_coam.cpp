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

#include <gtest/gtest.h>

#include <algorithm>
#include <cmath>
#include <random>
#include <vector>

#include "concept_probe/bottleneck.hpp"
#include "concept_probe/coam.hpp"
#include "concept_probe/errors.hpp"
#include "concept_probe/blob_io.hpp"
#include "concept_probe/image.hpp"
#include "concept_probe/numerics.hpp"
#include "concept_probe/random.hpp"
#include "oracle/reference.hpp"
#include "support/temp_dir.hpp"

namespace cp = concept_probe;

namespace {

cp::Tensor random_tensor(std::mt19937_64& rng, std::vector<std::size_t> dims) {
  cp::Tensor t(std::move(dims));
  for (auto& x : t.values()) x = static_cast<float>(cp::standard_normal(rng));
  return t;
}

cp::RgbImage random_image(std::mt19937_64& rng, std::size_t rows, std::size_t cols) {
  cp::RgbImage img(rows, cols);
  for (auto& p : img.pixels) p = static_cast<std::uint8_t>(cp::uniform_below(rng, 256));
  return img;
}

}  // namespace

TEST(Coam, SelectorCavPicksChannel) {
  std::mt19937_64 rng(1);
  const auto e = random_tensor(rng, {3, 4, 5});
  cp::Tensor cavs({2, 5});
  cavs.at(0, 2) = 5.0f;  // d * e_2
  const auto f = cp::coam(e, cavs);
  for (std::size_t h = 0; h < 3; ++h) {
    for (std::size_t w = 0; w < 4; ++w) {
      EXPECT_EQ(f.at(h, w, 0), e.at(h, w, 2));
      EXPECT_EQ(f.at(h, w, 1), 0.0f);
    }
  }
}

TEST(Coam, HandComputedCell) {
  const cp::Tensor e({1, 1, 2}, {3, 5});
  const std::vector<float> c{1, 2};
  EXPECT_FLOAT_EQ(cp::coam_slice(e, c).at(0, 0), 6.5f);
}

TEST(Coam, DepthMismatch) {
  EXPECT_THROW(cp::coam(cp::Tensor({2, 2, 3}), cp::Tensor({1, 4})), cp::UsageError);
}

TEST(Coam, MatchesOracleProperty) {
  std::mt19937_64 rng(2);
  for (int trial = 0; trial < 100; ++trial) {
    const std::size_t H = 1 + cp::uniform_below(rng, 9), W = 1 + cp::uniform_below(rng, 9),
                      d = 1 + cp::uniform_below(rng, 32), L = 1 + cp::uniform_below(rng, 5);
    const auto e = random_tensor(rng, {H, W, d});
    const auto cavs = random_tensor(rng, {L, d});
    const auto f = cp::coam(e, cavs);
    for (std::size_t j = 0; j < L; ++j) {
      const std::vector<float> flat(e.values().begin(), e.values().end());
      const std::vector<float> c(cavs.row(j).begin(), cavs.row(j).end());
      const auto ref = cp::oracle::coam_map(flat, H, W, d, c);
      for (std::size_t cell = 0; cell < H * W; ++cell) EXPECT_NEAR(f[cell * L + j], ref[cell], 1e-5);
    }
  }
}

TEST(Coam, GapIdentityProperty) {
  std::mt19937_64 rng(3);
  for (int trial = 0; trial < 200; ++trial) {
    const std::size_t H = 1 + cp::uniform_below(rng, 14), W = 1 + cp::uniform_below(rng, 14),
                      d = 1 + cp::uniform_below(rng, 64);
    const auto e = random_tensor(rng, {H, W, d});
    const auto cavs = random_tensor(rng, {1, d});
    const auto f = cp::coam_slice(e, cavs.row(0));
    double mean = 0.0;
    for (float v : f.values()) mean += v;
    mean /= static_cast<double>(H * W);
    const double u = cp::project(cavs, cp::gap(e).values())[0];
    EXPECT_NEAR(mean, u / static_cast<double>(d), 1e-5);
  }
}

TEST(Coam, LinearityProperty) {
  std::mt19937_64 rng(4);
  for (int trial = 0; trial < 50; ++trial) {
    const std::size_t H = 1 + cp::uniform_below(rng, 6), W = 1 + cp::uniform_below(rng, 6),
                      d = 1 + cp::uniform_below(rng, 16);
    const auto e1 = random_tensor(rng, {H, W, d}), e2 = random_tensor(rng, {H, W, d});
    const auto c1 = random_tensor(rng, {1, d}), c2 = random_tensor(rng, {1, d});
    cp::Tensor esum({H, W, d}), csum({1, d});
    for (std::size_t i = 0; i < esum.size(); ++i) esum[i] = e1[i] + e2[i];
    for (std::size_t i = 0; i < d; ++i) csum[i] = c1[i] + 2.0f * c2[i];
    const auto a = cp::coam_slice(esum, c1.row(0));
    const auto b1 = cp::coam_slice(e1, c1.row(0)), b2 = cp::coam_slice(e2, c1.row(0));
    const auto c = cp::coam_slice(e1, csum.row(0));
    const auto d1 = cp::coam_slice(e1, c2.row(0));
    for (std::size_t i = 0; i < a.size(); ++i) {
      EXPECT_NEAR(a[i], b1[i] + b2[i], 1e-5);
      EXPECT_NEAR(c[i], b1[i] + 2.0f * d1[i], 1e-5);
    }
  }
}

TEST(Upsample, ConstantAndSingleCell) {
  const auto seven = cp::Tensor::filled({3, 5}, 7.0f);
  const auto big = cp::upsample(seven, 13, 29);
  for (float v : big.values()) EXPECT_EQ(v, 7.0f);
  const cp::Tensor one({1, 1}, {-2.5f});
  const auto spread = cp::upsample(one, 4, 6);
  for (float v : spread.values()) EXPECT_EQ(v, -2.5f);
}

TEST(Upsample, HalfPixelBilinear) {
  const cp::Tensor raw({2, 2}, {0, 1, 0, 1});
  const auto up = cp::upsample(raw, 4, 4);
  const float expected[4] = {0.0f, 0.25f, 0.75f, 1.0f};
  for (std::size_t r = 0; r < 4; ++r) {
    for (std::size_t c = 0; c < 4; ++c) EXPECT_FLOAT_EQ(up.at(r, c), expected[c]);
  }
}

TEST(Upsample, Errors) {
  const cp::Tensor raw({2, 2});
  EXPECT_THROW(cp::upsample(raw, 0, 4), cp::UsageError);
  EXPECT_THROW(cp::upsample(raw, 1, 4), cp::UsageError);
}

TEST(Upsample, StaysWithinRangeProperty) {
  std::mt19937_64 rng(5);
  for (int trial = 0; trial < 100; ++trial) {
    const std::size_t H = 1 + cp::uniform_below(rng, 7), W = 1 + cp::uniform_below(rng, 7);
    const auto raw = random_tensor(rng, {H, W});
    const auto up = cp::upsample(raw, H + cp::uniform_below(rng, 40), W + cp::uniform_below(rng, 40));
    const auto [lo, hi] = std::minmax_element(raw.values().begin(), raw.values().end());
    for (float v : up.values()) {
      EXPECT_GE(v, *lo - 1e-6f);
      EXPECT_LE(v, *hi + 1e-6f);
    }
  }
}

TEST(Jet, AnchorsExact) {
  EXPECT_EQ(cp::jet(0.0), (std::array<double, 3>{0, 0, 0.5}));
  EXPECT_EQ(cp::jet(0.125), (std::array<double, 3>{0, 0, 1}));
  EXPECT_EQ(cp::jet(0.375), (std::array<double, 3>{0, 1, 1}));
  EXPECT_EQ(cp::jet(0.625), (std::array<double, 3>{1, 1, 0}));
  EXPECT_EQ(cp::jet(0.875), (std::array<double, 3>{1, 0, 0}));
  EXPECT_EQ(cp::jet(1.0), (std::array<double, 3>{0.5, 0, 0}));
  const auto mid = cp::jet(0.25);
  EXPECT_DOUBLE_EQ(mid[1], 0.5);
  EXPECT_DOUBLE_EQ(mid[2], 1.0);
}

TEST(Render, Examples) {
  std::mt19937_64 rng(6);
  const auto img = random_image(rng, 6, 5);
  const auto map = random_tensor(rng, {6, 5});
  cp::RenderOptions binary{cp::RenderMode::kBinary, 0.4, 0.0};
  EXPECT_EQ(cp::render(map, img, binary).image, img);
  binary.threshold = 1.01;
  EXPECT_EQ(cp::render(map, img, binary).image, cp::RgbImage(6, 5, 0));
  cp::RenderOptions coloured{cp::RenderMode::kColoured, 0.0, 0.5};
  EXPECT_EQ(cp::render(map, img, coloured).image, img);
  EXPECT_THROW(cp::render(cp::Tensor({5, 5}), img, coloured), cp::UsageError);
}

TEST(Render, BinaryKeepsOnlyHighPixels) {
  const cp::Tensor map({1, 3}, {0.0f, 5.0f, 10.0f});
  const cp::RgbImage img(1, 3, 200);
  const auto out = cp::render(map, img, {cp::RenderMode::kBinary, 0.4, 0.5}).image;
  EXPECT_EQ(out.at(0, 0, 0), 0);
  EXPECT_EQ(out.at(0, 1, 0), 200);
  EXPECT_EQ(out.at(0, 2, 0), 200);
}

TEST(Render, ColouredAddsScaledJetAndClamps) {
  const cp::Tensor map({1, 2}, {0.0f, 1.0f});
  const cp::RgbImage img(1, 2, 100);
  const auto out = cp::render(map, img, {cp::RenderMode::kColoured, 1.0, 0.5}).image;
  EXPECT_EQ(out.at(0, 0, 0), 100);
  EXPECT_EQ(out.at(0, 0, 2), 228);  // 100 + round(0.5 * 255 = 127.5) -> 227.5 -> 228
  EXPECT_EQ(out.at(0, 1, 0), 228);
  const auto saturated = cp::render(map, cp::RgbImage(1, 2, 250), {cp::RenderMode::kColoured, 1.0, 0.5}).image;
  EXPECT_EQ(saturated.at(0, 1, 0), 255);
}

TEST(Render, DegenerateMapFlagsAndMasksEverything) {
  const auto flat = cp::Tensor::filled({2, 2}, 3.0f);
  const cp::RgbImage img(2, 2, 90);
  const auto r = cp::render(flat, img, {cp::RenderMode::kBinary, 0.4, 0.5});
  EXPECT_TRUE(r.degenerate);
  EXPECT_EQ(r.image, cp::RgbImage(2, 2, 0));
  EXPECT_TRUE(cp::render(flat, img, {}).degenerate);
}

TEST(Png, RoundTrip) {
  std::mt19937_64 rng(7);
  const auto img = random_image(rng, 9, 13);
  cp::testing::TempDir dir("png");
  cp::write_png(dir / "x.png", img);
  EXPECT_EQ(cp::read_png(dir / "x.png"), img);
  cp::write_file(dir / "bad.png", "not a png");
  EXPECT_THROW(cp::read_png(dir / "bad.png"), cp::DataError);
}
