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

#include <Eigen/Dense>

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdio>
#include <numbers>

#include "bdcd/dataset.hpp"
#include "bdcd/log.hpp"

namespace bdcd {

namespace fs = std::filesystem;

namespace {

// 5x7 digit glyphs, one row per byte, bit 4 = leftmost column.
constexpr std::array<std::array<std::uint8_t, 7>, 10> kDigitGlyphs = {{
    {0x0E, 0x11, 0x13, 0x15, 0x19, 0x11, 0x0E},  // 0
    {0x04, 0x0C, 0x04, 0x04, 0x04, 0x04, 0x0E},  // 1
    {0x0E, 0x11, 0x01, 0x02, 0x04, 0x08, 0x1F},  // 2
    {0x1F, 0x02, 0x04, 0x02, 0x01, 0x11, 0x0E},  // 3
    {0x02, 0x06, 0x0A, 0x12, 0x1F, 0x02, 0x02},  // 4
    {0x1F, 0x10, 0x1E, 0x01, 0x01, 0x11, 0x0E},  // 5
    {0x06, 0x08, 0x10, 0x1E, 0x11, 0x11, 0x0E},  // 6
    {0x1F, 0x01, 0x02, 0x04, 0x08, 0x08, 0x08},  // 7
    {0x0E, 0x11, 0x11, 0x0E, 0x11, 0x11, 0x0E},  // 8
    {0x0E, 0x11, 0x11, 0x0F, 0x01, 0x02, 0x0C},  // 9
}};

struct Rgb {
  double r, g, b;
};

Rgb hsv_to_rgb(double h, double s, double v) {
  h = std::fmod(h, 360.0);
  if (h < 0) h += 360.0;
  const double c = v * s;
  const double x = c * (1.0 - std::fabs(std::fmod(h / 60.0, 2.0) - 1.0));
  const double m = v - c;
  double r = 0, g = 0, b = 0;
  switch (static_cast<int>(h / 60.0)) {
    case 0: r = c, g = x; break;
    case 1: r = x, g = c; break;
    case 2: g = c, b = x; break;
    case 3: g = x, b = c; break;
    case 4: r = x, b = c; break;
    default: r = c, b = x; break;
  }
  return {(r + m) * 255.0, (g + m) * 255.0, (b + m) * 255.0};
}

// Floating-point RGB canvas used while composing a frame.
struct Canvas {
  std::int64_t h, w;
  std::vector<double> px;

  Canvas(std::int64_t height, std::int64_t width)
      : h(height), w(width), px(static_cast<std::size_t>(height * width * 3), 0.0) {}

  double* at(std::int64_t y, std::int64_t x) {
    return px.data() + (y * w + x) * 3;
  }
  const double* at(std::int64_t y, std::int64_t x) const {
    return px.data() + (y * w + x) * 3;
  }

  void blend(std::int64_t y, std::int64_t x, Rgb c, double alpha) {
    if (y < 0 || y >= h || x < 0 || x >= w) return;
    double* p = at(y, x);
    p[0] += (c.r - p[0]) * alpha;
    p[1] += (c.g - p[1]) * alpha;
    p[2] += (c.b - p[2]) * alpha;
  }

  Rgb sample(double y, double x) const {
    y = std::clamp(y, 0.0, static_cast<double>(h - 1));
    x = std::clamp(x, 0.0, static_cast<double>(w - 1));
    const auto y0 = static_cast<std::int64_t>(y);
    const auto x0 = static_cast<std::int64_t>(x);
    const std::int64_t y1 = std::min(y0 + 1, h - 1);
    const std::int64_t x1 = std::min(x0 + 1, w - 1);
    const double fy = y - static_cast<double>(y0);
    const double fx = x - static_cast<double>(x0);
    double out[3];
    for (int c = 0; c < 3; ++c) {
      const double top = at(y0, x0)[c] * (1 - fx) + at(y0, x1)[c] * fx;
      const double bot = at(y1, x0)[c] * (1 - fx) + at(y1, x1)[c] * fx;
      out[c] = top * (1 - fy) + bot * fy;
    }
    return {out[0], out[1], out[2]};
  }
};

// Smooth value noise: a coarse random lattice bilinearly upsampled.
void paint_value_noise(Canvas& canvas, std::int64_t cells, Rgb base, double amplitude,
                       Rng& rng) {
  const std::int64_t n = cells + 1;
  std::vector<double> lattice(static_cast<std::size_t>(n * n * 3));
  for (double& v : lattice) v = rng.uniform(-amplitude, amplitude);
  for (std::int64_t y = 0; y < canvas.h; ++y) {
    const double gy = static_cast<double>(y) * cells / static_cast<double>(canvas.h);
    const auto iy = std::min<std::int64_t>(static_cast<std::int64_t>(gy), cells - 1);
    const double fy = gy - static_cast<double>(iy);
    for (std::int64_t x = 0; x < canvas.w; ++x) {
      const double gx = static_cast<double>(x) * cells / static_cast<double>(canvas.w);
      const auto ix = std::min<std::int64_t>(static_cast<std::int64_t>(gx), cells - 1);
      const double fx = gx - static_cast<double>(ix);
      double* p = canvas.at(y, x);
      const double base_rgb[3] = {base.r, base.g, base.b};
      for (int c = 0; c < 3; ++c) {
        auto l = [&](std::int64_t yy, std::int64_t xx) {
          return lattice[static_cast<std::size_t>((yy * n + xx) * 3 + c)];
        };
        const double top = l(iy, ix) * (1 - fx) + l(iy, ix + 1) * fx;
        const double bot = l(iy + 1, ix) * (1 - fx) + l(iy + 1, ix + 1) * fx;
        p[c] = base_rgb[c] + top * (1 - fy) + bot * fy;
      }
    }
  }
}

void fill_rect(Canvas& canvas, double y0, double x0, double y1, double x1, Rgb color,
               double alpha) {
  const auto ya = static_cast<std::int64_t>(std::floor(y0));
  const auto yb = static_cast<std::int64_t>(std::ceil(y1));
  const auto xa = static_cast<std::int64_t>(std::floor(x0));
  const auto xb = static_cast<std::int64_t>(std::ceil(x1));
  for (std::int64_t y = ya; y < yb; ++y) {
    for (std::int64_t x = xa; x < xb; ++x) canvas.blend(y, x, color, alpha);
  }
}

// Draws text made of digits with glyph cells of the given pixel size.
void draw_numeral(Canvas& canvas, const std::string& text, double top, double left,
                  double cell, Rgb color) {
  double x = left;
  for (char ch : text) {
    if (ch < '0' || ch > '9') continue;
    const auto& glyph = kDigitGlyphs[static_cast<std::size_t>(ch - '0')];
    for (int row = 0; row < 7; ++row) {
      for (int col = 0; col < 5; ++col) {
        if (glyph[static_cast<std::size_t>(row)] & (0x10 >> col)) {
          fill_rect(canvas, top + row * cell, x + col * cell, top + (row + 1) * cell,
                    x + (col + 1) * cell, color, 1.0);
        }
      }
    }
    x += 6 * cell;
  }
}

double numeral_width(const std::string& text, double cell) {
  return (6.0 * static_cast<double>(text.size()) - 1.0) * cell;
}

Canvas render_note_face(std::size_t class_index, const std::string& name,
                        std::int64_t note_h, std::int64_t note_w, Rng& rng) {
  const double hue = 36.0 * static_cast<double>(class_index) + rng.uniform(-6.0, 6.0);
  const Rgb body = hsv_to_rgb(hue, rng.uniform(0.55, 0.8), rng.uniform(0.75, 0.95));
  const Rgb ink = hsv_to_rgb(hue, rng.uniform(0.7, 0.9), rng.uniform(0.2, 0.35));
  const Rgb light = hsv_to_rgb(hue, 0.2, 0.97);

  Canvas note(note_h, note_w);
  paint_value_noise(note, 6, body, 14.0, rng);

  // Pale band and border frame.
  const double band = note_w * rng.uniform(0.18, 0.3);
  fill_rect(note, 0, note_w * 0.05, static_cast<double>(note_h), note_w * 0.05 + band,
            light, 0.55);
  const double border = std::max(1.0, note_h * 0.05);
  fill_rect(note, 0, 0, border, static_cast<double>(note_w), ink, 0.8);
  fill_rect(note, note_h - border, 0, static_cast<double>(note_h),
            static_cast<double>(note_w), ink, 0.8);
  fill_rect(note, 0, 0, static_cast<double>(note_h), border, ink, 0.8);
  fill_rect(note, 0, note_w - border, static_cast<double>(note_h),
            static_cast<double>(note_w), ink, 0.8);

  // Concentric guilloche-like rings in the band.
  const double cy = note_h / 2.0;
  const double cx = note_w * 0.05 + band / 2.0;
  const double ring_period = std::max(2.0, note_h * 0.06);
  for (std::int64_t y = 0; y < note_h; ++y) {
    for (std::int64_t x = 0; x < note_w; ++x) {
      const double d = std::hypot(y - cy, x - cx);
      if (d < band * 0.45 && std::fmod(d, ring_period) < ring_period * 0.35) {
        note.blend(y, x, ink, 0.35);
      }
    }
  }

  // Large numeral on the right, small numeral in the top-left corner.
  const double big_cell = std::min(note_h * 0.55 / 7.0,
                                   (note_w * 0.58) / (6.0 * name.size() - 1.0));
  const double big_left =
      note_w * 0.97 - border - numeral_width(name, big_cell) - rng.uniform(0.0, note_w * 0.03);
  draw_numeral(note, name, (note_h - 7.0 * big_cell) / 2.0, big_left, big_cell, ink);
  const double small_cell = std::max(1.0, big_cell * 0.3);
  draw_numeral(note, name, border * 1.6, border * 1.6, small_cell, ink);
  return note;
}

// Homography H with H * (u, v, 1) ~ (x, y, 1) for four point pairs.
Eigen::Matrix3d homography(const std::array<Eigen::Vector2d, 4>& from,
                           const std::array<Eigen::Vector2d, 4>& to) {
  Eigen::Matrix<double, 8, 8> a;
  Eigen::Matrix<double, 8, 1> b;
  for (int i = 0; i < 4; ++i) {
    const double u = from[i].x(), v = from[i].y();
    const double x = to[i].x(), y = to[i].y();
    a.row(2 * i) << u, v, 1, 0, 0, 0, -u * x, -v * x;
    a.row(2 * i + 1) << 0, 0, 0, u, v, 1, -u * y, -v * y;
    b(2 * i) = x;
    b(2 * i + 1) = y;
  }
  const Eigen::Matrix<double, 8, 1> h = a.partialPivLu().solve(b);
  Eigen::Matrix3d m;
  m << h(0), h(1), h(2), h(3), h(4), h(5), h(6), h(7), 1.0;
  return m;
}

std::uint8_t to_u8(double v) {
  return static_cast<std::uint8_t>(std::clamp<long>(std::lround(v), 0, 255));
}

}  // namespace

Image render_synthetic_note(std::size_t class_index, const ClassVocabulary& vocab,
                            std::int64_t image_size, Rng& rng) {
  if (class_index >= vocab.size()) {
    throw InvalidParameterError("class index out of range");
  }
  if (image_size < 16) throw InvalidParameterError("synthetic images need size >= 16");
  const auto s = static_cast<double>(image_size);

  // Background: muted table/cloth/paper tones with coarse texture.
  Canvas frame(image_size, image_size);
  const Rgb bg = hsv_to_rgb(rng.uniform(0.0, 360.0), rng.uniform(0.0, 0.25),
                            rng.uniform(0.35, 0.8));
  paint_value_noise(frame, 3 + static_cast<std::int64_t>(rng.below(6)), bg, 35.0, rng);

  // Note face rendered flat, then warped into the frame.
  const double scale = rng.uniform(0.72, 0.92);
  const double note_w = s * scale;
  const double note_h = note_w * rng.uniform(0.45, 0.52);
  const auto face_w = std::max<std::int64_t>(16, std::lround(note_w));
  const auto face_h = std::max<std::int64_t>(8, std::lround(note_h));
  const Canvas face = render_note_face(class_index, vocab.name(class_index), face_h,
                                       face_w, rng);

  const double angle = rng.uniform(-20.0, 20.0) * std::numbers::pi / 180.0;
  const double ccx = s / 2.0 + rng.uniform(-0.06, 0.06) * s;
  const double ccy = s / 2.0 + rng.uniform(-0.06, 0.06) * s;
  const double jitter = 0.05 * s;
  const std::array<Eigen::Vector2d, 4> face_corners = {
      Eigen::Vector2d(0, 0), Eigen::Vector2d(static_cast<double>(face_w), 0),
      Eigen::Vector2d(static_cast<double>(face_w), static_cast<double>(face_h)),
      Eigen::Vector2d(0, static_cast<double>(face_h))};
  std::array<Eigen::Vector2d, 4> frame_corners;
  for (int i = 0; i < 4; ++i) {
    const double dx = (i == 1 || i == 2 ? 0.5 : -0.5) * note_w;
    const double dy = (i >= 2 ? 0.5 : -0.5) * note_h;
    frame_corners[static_cast<std::size_t>(i)] =
        Eigen::Vector2d(ccx + std::cos(angle) * dx - std::sin(angle) * dy +
                            rng.uniform(-jitter, jitter),
                        ccy + std::sin(angle) * dx + std::cos(angle) * dy +
                            rng.uniform(-jitter, jitter));
  }
  const Eigen::Matrix3d to_face = homography(frame_corners, face_corners);

  // Inverse-map every frame pixel onto the note face.
  for (std::int64_t y = 0; y < image_size; ++y) {
    for (std::int64_t x = 0; x < image_size; ++x) {
      const Eigen::Vector3d q = to_face * Eigen::Vector3d(x + 0.5, y + 0.5, 1.0);
      const double u = q.x() / q.z();
      const double v = q.y() / q.z();
      if (u >= 0 && u < face_w && v >= 0 && v < face_h) {
        const Rgb c = face.sample(v - 0.5, u - 0.5);
        double* p = frame.at(y, x);
        p[0] = c.r, p[1] = c.g, p[2] = c.b;
      }
    }
  }

  // Wear: a few faded blotches and creases.
  const auto blotches = rng.below(4);
  for (std::uint64_t i = 0; i < blotches; ++i) {
    const double by = rng.uniform(0, s), bx = rng.uniform(0, s);
    const double radius = rng.uniform(0.03, 0.09) * s;
    const Rgb tint = hsv_to_rgb(40.0, 0.25, rng.uniform(0.6, 0.9));
    for (std::int64_t y = 0; y < image_size; ++y) {
      for (std::int64_t x = 0; x < image_size; ++x) {
        const double d = std::hypot(y - by, x - bx);
        if (d < radius) frame.blend(y, x, tint, 0.35 * (1.0 - d / radius));
      }
    }
  }
  if (rng.bernoulli(0.5)) {
    const bool vertical = rng.bernoulli(0.5);
    const double pos = rng.uniform(0.3, 0.7) * s;
    for (std::int64_t t = 0; t < image_size; ++t) {
      const auto k = static_cast<std::int64_t>(pos);
      if (vertical) {
        frame.blend(t, k, {240, 240, 235}, 0.3);
      } else {
        frame.blend(k, t, {240, 240, 235}, 0.3);
      }
    }
  }

  // Lighting gradient, global brightness and sensor noise.
  const double brightness = rng.uniform(0.65, 1.25);
  const double grad_angle = rng.uniform(0.0, 2.0 * std::numbers::pi);
  const double grad_strength = rng.uniform(0.0, 0.25);
  const double noise = rng.uniform(2.0, 9.0);
  Image out(image_size, image_size);
  for (std::int64_t y = 0; y < image_size; ++y) {
    for (std::int64_t x = 0; x < image_size; ++x) {
      const double t = ((x / s - 0.5) * std::cos(grad_angle) +
                        (y / s - 0.5) * std::sin(grad_angle));
      const double light = brightness * (1.0 + grad_strength * t);
      const double* p = frame.at(y, x);
      for (int c = 0; c < 3; ++c) {
        out.at(y, x, c) = to_u8(p[c] * light + rng.normal() * noise);
      }
    }
  }
  return out;
}

std::vector<fs::path> synth_generate(const fs::path& out, std::int64_t per_class,
                                     std::uint64_t seed, std::int64_t image_size,
                                     const ClassVocabulary& vocab) {
  if (per_class < 1) throw InvalidParameterError("per_class must be >= 1");
  std::vector<fs::path> written;
  written.reserve(static_cast<std::size_t>(per_class) * vocab.size());
  for (std::size_t c = 0; c < vocab.size(); ++c) {
    const fs::path dir = out / vocab.name(c);
    std::error_code ec;
    fs::create_directories(dir, ec);
    if (ec) throw IoError("cannot create " + dir.string() + ": " + ec.message());
    for (std::int64_t i = 0; i < per_class; ++i) {
      Rng rng = Rng::derive(seed, {c, static_cast<std::uint64_t>(i)});
      const Image image = render_synthetic_note(c, vocab, image_size, rng);
      char name[64];
      std::snprintf(name, sizeof(name), "%s_%05lld.png", vocab.name(c).c_str(),
                    static_cast<long long>(i));
      const fs::path path = dir / name;
      write_png(path, image);
      written.push_back(path);
    }
  }
  spdlog::info("wrote {} synthetic images to {}", written.size(), out.string());
  return written;
}

}  // namespace bdcd
