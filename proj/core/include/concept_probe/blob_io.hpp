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

#include <filesystem>
#include <string>

#include "concept_probe/tensor.hpp"

namespace concept_probe {

/// CXT1 tensor blob: magic "CXT1", u32 rank, u32 dims[rank], f32 payload.
/// All fields little-endian, payload row-major.
inline constexpr char kBlobMagic[4] = {'C', 'X', 'T', '1'};

std::string encode_blob(const Tensor& tensor);
Tensor decode_blob(std::string_view bytes, const std::string& origin = "<memory>");

void write_blob(const std::filesystem::path& path, const Tensor& tensor);
Tensor read_blob(const std::filesystem::path& path);

/// Whole-file helpers shared by the stores.
std::string read_file(const std::filesystem::path& path);
void write_file(const std::filesystem::path& path, std::string_view bytes);

}  // namespace concept_probe
