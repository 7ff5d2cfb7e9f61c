// Copyright 2026 The bdcd Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//      http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#ifndef BDCD_MODEL_FORMAT_HPP_
#define BDCD_MODEL_FORMAT_HPP_

#include <cstdint>
#include <filesystem>
#include <span>
#include <string>
#include <vector>

#include "json.hpp"

#include "bdcd/model.hpp"

namespace bdcd {

/// Binary model file (.bdcm), all integers little-endian:
///
///   "BDCM"              4 bytes magic
///   version             u16 (= 1)
///   header_len          u32
///   header              header_len bytes of UTF-8 JSON
///   blobs               per parameter tensor in layer order (weights then
///                       bias): u64 byte length, then raw f32 values
///   crc32               u32, IEEE CRC-32 of every preceding byte
inline constexpr char kModelMagic[4] = {'B', 'D', 'C', 'M'};
inline constexpr std::uint16_t kModelFormatVersion = 1;

/// The JSON header written for a model. Keys are emitted sorted so the
/// encoding is byte-deterministic.
nlohmann::json model_header(const ModelSpec& model);

std::vector<std::uint8_t> serialize_model(const ModelSpec& model);
ModelSpec deserialize_model(std::span<const std::uint8_t> bytes);

void save_model(const ModelSpec& model, const std::filesystem::path& path);

/// Throws FormatError (bad magic, truncation, header/blob mismatch),
/// VersionError (unsupported version) or CorruptionError (CRC mismatch on an
/// otherwise complete file).
ModelSpec load_model(const std::filesystem::path& path);

struct ModelInfo {
  nlohmann::json header;
  std::uint64_t parameter_count = 0;
  std::uint64_t file_size = 0;
  /// Hex CRC-32 of the header bytes; identifies the model in service replies.
  std::string model_id;

  nlohmann::json to_json() const;
};

/// Reads the preamble and header only; blobs are not loaded or verified.
ModelInfo model_info(const std::filesystem::path& path);

std::uint32_t crc32_ieee(std::span<const std::uint8_t> bytes);

}  // namespace bdcd

#endif  // BDCD_MODEL_FORMAT_HPP_
