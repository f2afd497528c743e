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

#include "concept_probe/blob_io.hpp"

#include <bit>
#include <cstdint>
#include <cstring>
#include <fstream>
#include <sstream>

#include "concept_probe/errors.hpp"

namespace concept_probe {
namespace {

void put_u32(std::string& out, std::uint32_t v) {
  for (int shift = 0; shift < 32; shift += 8) out.push_back(static_cast<char>((v >> shift) & 0xffu));
}

std::uint32_t get_u32(std::string_view bytes, std::size_t offset) {
  std::uint32_t v = 0;
  for (int b = 0; b < 4; ++b) {
    v |= static_cast<std::uint32_t>(static_cast<unsigned char>(bytes[offset + b])) << (8 * b);
  }
  return v;
}

}  // namespace

std::string encode_blob(const Tensor& tensor) {
  std::string out(kBlobMagic, 4);
  put_u32(out, static_cast<std::uint32_t>(tensor.rank()));
  for (std::size_t extent : tensor.dims()) put_u32(out, static_cast<std::uint32_t>(extent));
  out.reserve(out.size() + 4 * tensor.size());
  for (float value : tensor.values()) put_u32(out, std::bit_cast<std::uint32_t>(value));
  return out;
}

Tensor decode_blob(std::string_view bytes, const std::string& origin) {
  if (bytes.size() < 8 || std::memcmp(bytes.data(), kBlobMagic, 4) != 0) {
    throw DataError(origin + ": not a CXT1 blob");
  }
  const std::uint32_t rank = get_u32(bytes, 4);
  if (rank == 0 || rank > 3) throw DataError(origin + ": unsupported rank " + std::to_string(rank));
  if (bytes.size() < 8 + 4 * static_cast<std::size_t>(rank)) throw DataError(origin + ": truncated header");
  std::vector<std::size_t> dims(rank);
  std::size_t volume = 1;
  for (std::uint32_t i = 0; i < rank; ++i) {
    dims[i] = get_u32(bytes, 8 + 4 * i);
    if (dims[i] == 0) throw DataError(origin + ": zero extent");
    volume *= dims[i];
  }
  const std::size_t header = 8 + 4 * static_cast<std::size_t>(rank);
  if (bytes.size() != header + 4 * volume) {
    throw DataError(origin + ": payload is " + std::to_string(bytes.size() - header) +
                    " bytes, expected " + std::to_string(4 * volume));
  }
  std::vector<float> data(volume);
  for (std::size_t i = 0; i < volume; ++i) data[i] = std::bit_cast<float>(get_u32(bytes, header + 4 * i));
  return Tensor(std::move(dims), std::move(data));
}

std::string read_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw DataError("cannot open " + path.string());
  std::ostringstream buffer;
  buffer << in.rdbuf();
  return std::move(buffer).str();
}

void write_file(const std::filesystem::path& path, std::string_view bytes) {
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw DataError("cannot write " + path.string());
  out.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
  if (!out) throw DataError("short write to " + path.string());
}

void write_blob(const std::filesystem::path& path, const Tensor& tensor) {
  write_file(path, encode_blob(tensor));
}

Tensor read_blob(const std::filesystem::path& path) {
  return decode_blob(read_file(path), path.string());
}

}  // namespace concept_probe
