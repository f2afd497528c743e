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
#include <vector>

namespace concept_probe {

/// Interleaved 8-bit RGB raster.
struct RgbImage {
  std::size_t rows = 0;
  std::size_t cols = 0;
  std::vector<std::uint8_t> pixels;  // rows * cols * 3

  RgbImage() = default;
  RgbImage(std::size_t r, std::size_t c, std::uint8_t fill = 0) : rows(r), cols(c), pixels(r * c * 3, fill) {}

  std::uint8_t& at(std::size_t r, std::size_t c, std::size_t channel) { return pixels[(r * cols + c) * 3 + channel]; }
  std::uint8_t at(std::size_t r, std::size_t c, std::size_t channel) const {
    return pixels[(r * cols + c) * 3 + channel];
  }
  friend bool operator==(const RgbImage&, const RgbImage&) = default;
};

void write_png(const std::filesystem::path& path, const RgbImage& image);

/// Reads an 8-bit PNG, converting gray/alpha/palette variants to RGB.
RgbImage read_png(const std::filesystem::path& path);

}  // namespace concept_probe
