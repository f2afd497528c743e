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

#include "concept_probe/coam.hpp"

#include <algorithm>
#include <cmath>

#include "concept_probe/errors.hpp"

namespace concept_probe {

Tensor coam(const Tensor& pre_gap, const Tensor& cavs) {
  if (pre_gap.rank() != 3 || cavs.rank() != 2 || pre_gap.dim(2) != cavs.dim(1)) {
    throw UsageError("coam: feature depth does not match the concept bank");
  }
  const std::size_t H = pre_gap.dim(0), W = pre_gap.dim(1), d = pre_gap.dim(2), L = cavs.dim(0);
  Tensor out({H, W, L});
  const auto e = pre_gap.values();
  const double inv_d = 1.0 / static_cast<double>(d);
  for (std::size_t cell = 0; cell < H * W; ++cell) {
    const auto feature = e.subspan(cell * d, d);
    for (std::size_t j = 0; j < L; ++j) {
      const auto c = cavs.row(j);
      double acc = 0.0;
      for (std::size_t k = 0; k < d; ++k) acc += static_cast<double>(c[k]) * feature[k];
      out[cell * L + j] = static_cast<float>(acc * inv_d);
    }
  }
  return out;
}

Tensor coam_slice(const Tensor& pre_gap, std::span<const float> cav) {
  if (pre_gap.rank() != 3 || pre_gap.dim(2) != cav.size()) {
    throw UsageError("coam: feature depth does not match the concept vector");
  }
  const Tensor row({1, cav.size()}, std::vector<float>(cav.begin(), cav.end()));
  const Tensor maps = coam(pre_gap, row);
  return Tensor({pre_gap.dim(0), pre_gap.dim(1)}, std::vector<float>(maps.values().begin(), maps.values().end()));
}

Tensor upsample(const Tensor& raw, std::size_t rows, std::size_t cols) {
  if (raw.rank() != 2) throw UsageError("upsample: expected a rank-2 map");
  if (rows == 0 || cols == 0) throw UsageError("upsample: target size must be positive");
  const std::size_t H = raw.dim(0), W = raw.dim(1);
  if (rows < H || cols < W) throw UsageError("upsample: target is smaller than the source map");

  struct Tap {
    std::size_t lo, hi;
    double frac;
  };
  auto taps = [](std::size_t out_n, std::size_t in_n) {
    std::vector<Tap> t(out_n);
    const double scale = static_cast<double>(in_n) / static_cast<double>(out_n);
    for (std::size_t o = 0; o < out_n; ++o) {
      double src = (static_cast<double>(o) + 0.5) * scale - 0.5;
      src = std::clamp(src, 0.0, static_cast<double>(in_n - 1));
      const auto lo = static_cast<std::size_t>(std::floor(src));
      const std::size_t hi = std::min(lo + 1, in_n - 1);
      t[o] = {lo, hi, src - static_cast<double>(lo)};
    }
    return t;
  };
  const auto row_taps = taps(rows, H);
  const auto col_taps = taps(cols, W);

  Tensor out({rows, cols});
  for (std::size_t r = 0; r < rows; ++r) {
    const Tap& tr = row_taps[r];
    for (std::size_t c = 0; c < cols; ++c) {
      const Tap& tc = col_taps[c];
      const double top = (1.0 - tc.frac) * raw.at(tr.lo, tc.lo) + tc.frac * raw.at(tr.lo, tc.hi);
      const double bottom = (1.0 - tc.frac) * raw.at(tr.hi, tc.lo) + tc.frac * raw.at(tr.hi, tc.hi);
      out.at(r, c) = static_cast<float>((1.0 - tr.frac) * top + tr.frac * bottom);
    }
  }
  return out;
}

std::vector<double> normalize_minmax(const Tensor& map, bool& degenerate) {
  const auto v = map.values();
  const auto [lo, hi] = std::minmax_element(v.begin(), v.end());
  const double low = *lo, span = static_cast<double>(*hi) - *lo;
  degenerate = !(span > 0.0);
  std::vector<double> out(v.size(), 0.0);
  if (degenerate) return out;
  for (std::size_t i = 0; i < v.size(); ++i) out[i] = (v[i] - low) / span;
  return out;
}

std::array<double, 3> jet(double t) {
  struct Anchor {
    double at;
    std::array<double, 3> rgb;
  };
  static constexpr std::array<Anchor, 6> kAnchors{{{0.0, {0.0, 0.0, 0.5}},
                                                   {0.125, {0.0, 0.0, 1.0}},
                                                   {0.375, {0.0, 1.0, 1.0}},
                                                   {0.625, {1.0, 1.0, 0.0}},
                                                   {0.875, {1.0, 0.0, 0.0}},
                                                   {1.0, {0.5, 0.0, 0.0}}}};
  t = std::clamp(t, 0.0, 1.0);
  for (std::size_t a = 1; a < kAnchors.size(); ++a) {
    if (t <= kAnchors[a].at) {
      const auto& lo = kAnchors[a - 1];
      const auto& hi = kAnchors[a];
      const double w = (t - lo.at) / (hi.at - lo.at);
      return {lo.rgb[0] + w * (hi.rgb[0] - lo.rgb[0]), lo.rgb[1] + w * (hi.rgb[1] - lo.rgb[1]),
              lo.rgb[2] + w * (hi.rgb[2] - lo.rgb[2])};
    }
  }
  return kAnchors.back().rgb;
}

RenderResult render(const Tensor& upsampled, const RgbImage& image, const RenderOptions& options) {
  if (upsampled.rank() != 2 || upsampled.dim(0) != image.rows || upsampled.dim(1) != image.cols) {
    throw UsageError("render: heatmap and image sizes differ");
  }
  RenderResult result;
  const auto norm = normalize_minmax(upsampled, result.degenerate);
  result.image = image;
  for (std::size_t p = 0; p < norm.size(); ++p) {
    if (options.mode == RenderMode::kBinary) {
      const bool keep = !result.degenerate && norm[p] >= options.threshold;
      if (!keep) {
        for (std::size_t ch = 0; ch < 3; ++ch) result.image.pixels[p * 3 + ch] = 0;
      }
    } else {
      const auto colour = jet(norm[p]);
      for (std::size_t ch = 0; ch < 3; ++ch) {
        const double v = image.pixels[p * 3 + ch] + options.beta * 255.0 * colour[ch];
        result.image.pixels[p * 3 + ch] = static_cast<std::uint8_t>(std::lround(std::clamp(v, 0.0, 255.0)));
      }
    }
  }
  return result;
}

}  // namespace concept_probe
