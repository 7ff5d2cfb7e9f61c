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

#include "bdcd/image.hpp"

#include <png.h>

#include <algorithm>
#include <cmath>
#include <csetjmp>
#include <cstdio>
#include <fstream>
#include <iterator>
#include <numbers>

#include <jpeglib.h>

namespace bdcd {

namespace {

bool is_png(std::span<const std::uint8_t> bytes) {
  static constexpr std::uint8_t kSig[8] = {0x89, 'P', 'N', 'G', '\r', '\n', 0x1a, '\n'};
  return bytes.size() >= 8 && std::equal(kSig, kSig + 8, bytes.begin());
}

bool is_jpeg(std::span<const std::uint8_t> bytes) {
  return bytes.size() >= 3 && bytes[0] == 0xff && bytes[1] == 0xd8 && bytes[2] == 0xff;
}

Image decode_png(std::span<const std::uint8_t> bytes) {
  png_image png{};
  png.version = PNG_IMAGE_VERSION;
  if (!png_image_begin_read_from_memory(&png, bytes.data(), bytes.size())) {
    std::string msg = png.message;
    png_image_free(&png);
    throw DecodeError("png: " + msg);
  }
  png.format = PNG_FORMAT_RGB;
  Image image(png.height, png.width);
  if (!png_image_finish_read(&png, nullptr, image.pixels.data(), 0, nullptr)) {
    std::string msg = png.message;
    png_image_free(&png);
    throw DecodeError("png: " + msg);
  }
  return image;
}

struct JpegErrorManager {
  jpeg_error_mgr base;
  std::jmp_buf jump;
  char message[JMSG_LENGTH_MAX];
};

void jpeg_error_exit(j_common_ptr cinfo) {
  auto* err = reinterpret_cast<JpegErrorManager*>(cinfo->err);
  (*cinfo->err->format_message)(cinfo, err->message);
  std::longjmp(err->jump, 1);
}

void jpeg_silent(j_common_ptr /*cinfo*/) {}

// Kept free of objects with destructors between setjmp and longjmp.
bool decode_jpeg_raw(std::span<const std::uint8_t> bytes, Image& out, std::string& error) {
  jpeg_decompress_struct cinfo{};
  JpegErrorManager err{};
  cinfo.err = jpeg_std_error(&err.base);
  err.base.error_exit = jpeg_error_exit;
  err.base.output_message = jpeg_silent;
  if (setjmp(err.jump)) {
    jpeg_destroy_decompress(&cinfo);
    error = err.message;
    return false;
  }
  jpeg_create_decompress(&cinfo);
  jpeg_mem_src(&cinfo, bytes.data(), static_cast<unsigned long>(bytes.size()));
  jpeg_read_header(&cinfo, TRUE);
  cinfo.out_color_space = JCS_RGB;
  jpeg_start_decompress(&cinfo);
  out.height = cinfo.output_height;
  out.width = cinfo.output_width;
  out.pixels.resize(static_cast<std::size_t>(out.height * out.width * 3));
  while (cinfo.output_scanline < cinfo.output_height) {
    JSAMPROW row = out.pixels.data() +
                   static_cast<std::size_t>(cinfo.output_scanline) * out.width * 3;
    jpeg_read_scanlines(&cinfo, &row, 1);
  }
  jpeg_finish_decompress(&cinfo);
  jpeg_destroy_decompress(&cinfo);
  return true;
}

Image decode_jpeg(std::span<const std::uint8_t> bytes) {
  Image image;
  std::string error;
  if (!decode_jpeg_raw(bytes, image, error)) throw DecodeError("jpeg: " + error);
  return image;
}

std::uint8_t to_u8(double v) {
  return static_cast<std::uint8_t>(std::clamp<long>(std::lround(v), 0, 255));
}

// Bilinear read with coordinates clamped to the image (edge replicate).
double sample_bilinear(const Image& img, double y, double x, std::int64_t c) {
  y = std::clamp(y, 0.0, static_cast<double>(img.height - 1));
  x = std::clamp(x, 0.0, static_cast<double>(img.width - 1));
  const auto y0 = static_cast<std::int64_t>(std::floor(y));
  const auto x0 = static_cast<std::int64_t>(std::floor(x));
  const std::int64_t y1 = std::min(y0 + 1, img.height - 1);
  const std::int64_t x1 = std::min(x0 + 1, img.width - 1);
  const double fy = y - static_cast<double>(y0);
  const double fx = x - static_cast<double>(x0);
  const double top = img.at(y0, x0, c) * (1.0 - fx) + img.at(y0, x1, c) * fx;
  const double bottom = img.at(y1, x0, c) * (1.0 - fx) + img.at(y1, x1, c) * fx;
  return top * (1.0 - fy) + bottom * fy;
}

}  // namespace

Image decode_image(std::span<const std::uint8_t> bytes) {
  if (is_png(bytes)) return decode_png(bytes);
  if (is_jpeg(bytes)) return decode_jpeg(bytes);
  throw DecodeError("not a PNG or JPEG image");
}

Image read_image(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open " + path.string());
  std::vector<std::uint8_t> bytes((std::istreambuf_iterator<char>(in)),
                                  std::istreambuf_iterator<char>());
  return decode_image(bytes);
}

std::vector<std::uint8_t> encode_png(const Image& image) {
  png_image png{};
  png.version = PNG_IMAGE_VERSION;
  png.width = static_cast<png_uint_32>(image.width);
  png.height = static_cast<png_uint_32>(image.height);
  png.format = PNG_FORMAT_RGB;
  png_alloc_size_t size = 0;
  if (!png_image_write_get_memory_size(png, size, 0, image.pixels.data(), 0, nullptr)) {
    throw IoError(std::string("png encode: ") + png.message);
  }
  std::vector<std::uint8_t> out(size);
  if (!png_image_write_to_memory(&png, out.data(), &size, 0, image.pixels.data(), 0,
                                 nullptr)) {
    throw IoError(std::string("png encode: ") + png.message);
  }
  out.resize(size);
  return out;
}

void write_png(const std::filesystem::path& path, const Image& image) {
  const auto bytes = encode_png(image);
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw IoError("cannot write " + path.string());
  out.write(reinterpret_cast<const char*>(bytes.data()),
            static_cast<std::streamsize>(bytes.size()));
  if (!out) throw IoError("short write to " + path.string());
}

Image resize_bilinear(const Image& image, std::int64_t height, std::int64_t width) {
  if (image.height < 1 || image.width < 1 || height < 1 || width < 1) {
    throw InvalidShapeError("resize needs positive dimensions");
  }
  if (image.height == height && image.width == width) return image;
  Image out(height, width);
  auto source_coord = [](std::int64_t i, std::int64_t src, std::int64_t dst) {
    if (dst == 1) return static_cast<double>(src - 1) / 2.0;
    return static_cast<double>(i) * static_cast<double>(src - 1) /
           static_cast<double>(dst - 1);
  };
  for (std::int64_t y = 0; y < height; ++y) {
    const double sy = source_coord(y, image.height, height);
    for (std::int64_t x = 0; x < width; ++x) {
      const double sx = source_coord(x, image.width, width);
      for (std::int64_t c = 0; c < 3; ++c) {
        out.at(y, x, c) = to_u8(sample_bilinear(image, sy, sx, c));
      }
    }
  }
  return out;
}

void normalize_into(const Image& image, std::span<float> dst) {
  if (dst.size() != image.pixels.size()) {
    throw InvalidShapeError("normalize destination has the wrong size");
  }
  for (std::size_t i = 0; i < dst.size(); ++i) {
    dst[i] = static_cast<float>(image.pixels[i]) / 255.0f;
  }
}

Tensor normalize(const Image& image, std::int64_t size) {
  if (image.height != size || image.width != size ||
      image.pixels.size() != static_cast<std::size_t>(size * size * 3)) {
    throw InvalidShapeError("normalize expects a " + std::to_string(size) + "x" +
                            std::to_string(size) + "x3 image, got " +
                            std::to_string(image.height) + "x" +
                            std::to_string(image.width));
  }
  Tensor out({size, size, 3});
  normalize_into(image, out.data());
  return out;
}

AugmentConfig AugmentConfig::none() {
  AugmentConfig cfg;
  cfg.rotate = false;
  cfg.hflip_probability = 0.0;
  cfg.vflip_probability = 0.0;
  cfg.scale = false;
  cfg.translate = false;
  return cfg;
}

void AugmentConfig::validate() const {
  auto is_probability = [](double p) { return p >= 0.0 && p <= 1.0; };
  if (!is_probability(hflip_probability) || !is_probability(vflip_probability)) {
    throw InvalidParameterError("flip probabilities must lie in [0, 1]");
  }
  if (!(max_rotation_degrees >= 0.0) || !(max_translate_fraction >= 0.0)) {
    throw InvalidParameterError("rotation and translation bounds must be >= 0");
  }
  if (!(min_scale > 0.0 && min_scale <= max_scale)) {
    throw InvalidParameterError("scale range must satisfy 0 < min <= max");
  }
}

bool AugmentSample::is_identity() const {
  return rotation_degrees == 0.0 && !hflip && !vflip && scale == 1.0 && shift_x == 0.0 &&
         shift_y == 0.0;
}

AugmentSample sample_augment(const AugmentConfig& cfg, std::int64_t height,
                             std::int64_t width, Rng& rng) {
  cfg.validate();
  AugmentSample s;
  if (cfg.rotate) {
    s.rotation_degrees = rng.uniform(-cfg.max_rotation_degrees, cfg.max_rotation_degrees);
  }
  s.hflip = cfg.hflip_probability > 0.0 && rng.bernoulli(cfg.hflip_probability);
  s.vflip = cfg.vflip_probability > 0.0 && rng.bernoulli(cfg.vflip_probability);
  if (cfg.scale) s.scale = rng.uniform(cfg.min_scale, cfg.max_scale);
  if (cfg.translate) {
    s.shift_x = rng.uniform(-cfg.max_translate_fraction, cfg.max_translate_fraction) *
                static_cast<double>(width);
    s.shift_y = rng.uniform(-cfg.max_translate_fraction, cfg.max_translate_fraction) *
                static_cast<double>(height);
  }
  return s;
}

Image apply_augment(const Image& image, const AugmentSample& s) {
  if (s.is_identity()) return image;
  if (!(s.scale > 0.0)) throw InvalidParameterError("augment scale must be positive");

  // Forward map on centred coordinates: out = scale * F * R * in + shift.
  // Sampling needs the inverse: in = R^T * F * (out - shift) / scale.
  const double theta = s.rotation_degrees * std::numbers::pi / 180.0;
  const double cos_t = std::cos(theta);
  const double sin_t = std::sin(theta);
  const double fx = s.hflip ? -1.0 : 1.0;
  const double fy = s.vflip ? -1.0 : 1.0;
  const double cx = static_cast<double>(image.width - 1) / 2.0;
  const double cy = static_cast<double>(image.height - 1) / 2.0;

  Image out(image.height, image.width);
  for (std::int64_t y = 0; y < image.height; ++y) {
    for (std::int64_t x = 0; x < image.width; ++x) {
      const double ux = fx * (static_cast<double>(x) - cx - s.shift_x) / s.scale;
      const double uy = fy * (static_cast<double>(y) - cy - s.shift_y) / s.scale;
      const double src_x = cos_t * ux + sin_t * uy + cx;
      const double src_y = -sin_t * ux + cos_t * uy + cy;
      for (std::int64_t c = 0; c < 3; ++c) {
        out.at(y, x, c) = to_u8(sample_bilinear(image, src_y, src_x, c));
      }
    }
  }
  return out;
}

Image augment(const Image& image, const AugmentConfig& cfg, Rng& rng) {
  return apply_augment(image, sample_augment(cfg, image.height, image.width, rng));
}

}  // namespace bdcd
