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

#ifndef BDCD_IMAGE_HPP_
#define BDCD_IMAGE_HPP_

#include <cstdint>
#include <filesystem>
#include <span>
#include <vector>

#include "bdcd/rng.hpp"
#include "bdcd/tensor.hpp"

namespace bdcd {

/// 8-bit RGB raster, row-major, channels interleaved.
struct Image {
  std::int64_t height = 0;
  std::int64_t width = 0;
  std::vector<std::uint8_t> pixels;

  Image() = default;
  Image(std::int64_t h, std::int64_t w)
      : height(h), width(w), pixels(static_cast<std::size_t>(h * w * 3), 0) {}

  static constexpr std::int64_t kChannels = 3;

  std::uint8_t& at(std::int64_t y, std::int64_t x, std::int64_t c) {
    return pixels[static_cast<std::size_t>((y * width + x) * 3 + c)];
  }
  std::uint8_t at(std::int64_t y, std::int64_t x, std::int64_t c) const {
    return pixels[static_cast<std::size_t>((y * width + x) * 3 + c)];
  }

  bool operator==(const Image&) const = default;
};

/// Decodes PNG or JPEG bytes (sniffed by signature) to RGB. Throws
/// DecodeError for anything else or for malformed data.
Image decode_image(std::span<const std::uint8_t> bytes);
Image read_image(const std::filesystem::path& path);

/// 8-bit RGB PNG. Output is byte-deterministic for a given image.
std::vector<std::uint8_t> encode_png(const Image& image);
void write_png(const std::filesystem::path& path, const Image& image);

/// Bilinear resampling with corner-aligned sampling: output corners map
/// exactly onto input corners.
Image resize_bilinear(const Image& image, std::int64_t height, std::int64_t width);

/// Scales channel values to [0,1] as a [H, W, 3] tensor. Throws
/// InvalidShapeError unless the image is size x size.
Tensor normalize(const Image& image, std::int64_t size);

/// Writes the normalized pixels of image into dst (H*W*3 floats).
void normalize_into(const Image& image, std::span<float> dst);

/// Random geometric augmentation settings. Each transform is sampled
/// independently per image.
struct AugmentConfig {
  bool rotate = true;
  double max_rotation_degrees = 15.0;
  double hflip_probability = 0.5;
  double vflip_probability = 0.5;
  bool scale = true;
  double min_scale = 0.9;
  double max_scale = 1.1;
  bool translate = true;
  double max_translate_fraction = 0.1;

  /// Every transform off.
  static AugmentConfig none();

  void validate() const;
};

/// Concrete transform drawn from an AugmentConfig.
struct AugmentSample {
  double rotation_degrees = 0.0;
  bool hflip = false;
  bool vflip = false;
  double scale = 1.0;
  double shift_x = 0.0;  // pixels
  double shift_y = 0.0;  // pixels

  bool is_identity() const;
};

AugmentSample sample_augment(const AugmentConfig& cfg, std::int64_t height,
                             std::int64_t width, Rng& rng);

/// Applies rotate -> flip -> scale -> translate about the image centre as a
/// single inverse-mapped bilinear warp with edge-replicate fill. Identity
/// samples return the input unchanged.
Image apply_augment(const Image& image, const AugmentSample& sample);

Image augment(const Image& image, const AugmentConfig& cfg, Rng& rng);

}  // namespace bdcd

#endif  // BDCD_IMAGE_HPP_
