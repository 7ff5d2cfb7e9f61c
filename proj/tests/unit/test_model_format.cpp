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

#include <doctest.h>

#include <cstring>
#include <fstream>

#include "bdcd/model.hpp"
#include "bdcd/model_format.hpp"
#include "temp_dir.hpp"

using namespace bdcd;
using bdcd::testing::TempDir;

namespace {

std::vector<std::uint8_t> read_bytes(const std::filesystem::path& p) {
  std::ifstream in(p, std::ios::binary);
  return {std::istreambuf_iterator<char>(in), {}};
}

void write_bytes(const std::filesystem::path& p, const std::vector<std::uint8_t>& bytes) {
  std::ofstream out(p, std::ios::binary | std::ios::trunc);
  out.write(reinterpret_cast<const char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
}

// Small random model with every layer kind.
ModelSpec random_small_model(Rng& rng) {
  const std::int64_t size = 8;
  const std::int64_t c1 = 1 + static_cast<std::int64_t>(rng.below(4));
  const std::int64_t hidden = 2 + static_cast<std::int64_t>(rng.below(6));
  ModelSpec m;
  m.input_shape = {size, size, 3};
  m.architecture = "random-small";
  m.layers.push_back(LayerParams<float>::conv2d(uniform<float>({3, 3, 3, c1}, -1, 1, rng),
                                                uniform<float>({c1}, -1, 1, rng), 1,
                                                rng.bernoulli(0.5) ? Padding::kSame
                                                                   : Padding::kValid));
  const std::int64_t spatial = m.layers[0].hyper.padding == Padding::kSame ? 8 : 6;
  m.layers.push_back(LayerParams<float>::relu());
  m.layers.push_back(LayerParams<float>::maxpool());
  m.layers.push_back(LayerParams<float>::flatten());
  const std::int64_t features = (spatial / 2) * (spatial / 2) * c1;
  m.layers.push_back(LayerParams<float>::dense(uniform<float>({features, hidden}, -1, 1, rng),
                                               uniform<float>({hidden}, -1, 1, rng)));
  m.layers.push_back(LayerParams<float>::relu());
  m.layers.push_back(LayerParams<float>::dropout(rng.uniform(0.0, 0.9)));
  m.layers.push_back(LayerParams<float>::dense(uniform<float>({hidden, 10}, -1, 1, rng),
                                               uniform<float>({10}, -1, 1, rng)));
  m.layers.push_back(LayerParams<float>::softmax());
  return m;
}

Image fixture_image(std::uint64_t seed) {
  Rng rng(seed);
  Image img(24 + static_cast<std::int64_t>(rng.below(40)), 24 + static_cast<std::int64_t>(rng.below(40)));
  for (auto& p : img.pixels) p = static_cast<std::uint8_t>(rng.below(256));
  return img;
}

}  // namespace

TEST_CASE("saved files start with the magic and are byte-deterministic") {
  TempDir dir("bdcd-fmt");
  const ModelSpec m = build_model({}, 32, 9);
  save_model(m, dir / "a.bdcm");
  save_model(m, dir / "b.bdcm");
  const auto a = read_bytes(dir / "a.bdcm");
  CHECK(std::memcmp(a.data(), "BDCM", 4) == 0);
  CHECK(a[4] == 1);
  CHECK(a[5] == 0);
  CHECK(a == read_bytes(dir / "b.bdcm"));
  CHECK(serialize_model(m) == a);

  // Footer is the CRC32 of everything before it.
  const std::span<const std::uint8_t> body(a.data(), a.size() - 4);
  const std::uint32_t crc = crc32_ieee(body);
  CHECK(a[a.size() - 4] == (crc & 0xff));
  CHECK(a[a.size() - 1] == (crc >> 24));
}

TEST_CASE("crc32 check value") {
  const std::string s = "123456789";
  CHECK(crc32_ieee({reinterpret_cast<const std::uint8_t*>(s.data()), s.size()}) == 0xCBF43926u);
}

TEST_CASE("round trip preserves structure, parameters and predictions") {
  TempDir dir("bdcd-rt");
  Rng rng(2);
  for (int t = 0; t < 10; ++t) {
    const ModelSpec m = random_small_model(rng);
    save_model(m, dir / "m.bdcm");
    const ModelSpec back = load_model(dir / "m.bdcm");
    CHECK(back == m);
  }

  const ModelSpec m = build_model({}, 32, 4);
  save_model(m, dir / "d.bdcm");
  const ModelSpec back = load_model(dir / "d.bdcm");
  for (std::uint64_t s = 0; s < 10; ++s) {
    const Image img = fixture_image(s);
    const Prediction a = predict(m, img), b = predict(back, img);
    REQUIRE(a.probabilities.size() == b.probabilities.size());
    CHECK(std::memcmp(a.probabilities.data(), b.probabilities.data(),
                      a.probabilities.size() * sizeof(float)) == 0);
  }
}

TEST_CASE("load errors") {
  TempDir dir("bdcd-err");
  const ModelSpec m = build_model({}, 16, 5);
  const auto good = serialize_model(m);

  SUBCASE("missing file") { CHECK_THROWS_AS(load_model(dir / "nope.bdcm"), NotFoundError); }
  SUBCASE("bad magic") {
    write_bytes(dir / "x", {'P', 'K', 3, 4, 0, 0, 0, 0, 0, 0, 0, 0, 0, 0, 0, 0, 0, 0, 0, 0});
    CHECK_THROWS_AS(load_model(dir / "x"), FormatError);
    CHECK_THROWS_AS(deserialize_model(std::vector<std::uint8_t>{'B', 'D'}), FormatError);
  }
  SUBCASE("unsupported version with a valid checksum") {
    auto bytes = good;
    bytes[4] = 2;
    bytes.resize(bytes.size() - 4);
    const std::uint32_t crc = crc32_ieee(bytes);
    for (int i = 0; i < 4; ++i) bytes.push_back(static_cast<std::uint8_t>(crc >> (8 * i)));
    CHECK_THROWS_AS(deserialize_model(bytes), VersionError);
  }
  SUBCASE("payload byte flip") {
    auto bytes = good;
    bytes[bytes.size() - 100] ^= 0x01;
    CHECK_THROWS_AS(deserialize_model(bytes), CorruptionError);
  }
  SUBCASE("every single-byte flip is detected") {
    Rng rng(77);
    for (int t = 0; t < 300; ++t) {
      auto bytes = good;
      const std::size_t pos = rng.below(bytes.size());
      bytes[pos] ^= static_cast<std::uint8_t>(1 + rng.below(255));
      CHECK_THROWS_AS(deserialize_model(bytes), CorruptionError);
    }
  }
  SUBCASE("truncations are format errors") {
    Rng rng(5);
    const std::size_t header_end = 10 + (good[6] | good[7] << 8 | good[8] << 16 | good[9] << 24);
    for (int t = 0; t < 200; ++t) {
      const std::size_t cut = header_end + rng.below(good.size() - header_end);
      const std::vector<std::uint8_t> bytes(good.begin(), good.begin() + static_cast<long>(cut));
      CHECK_THROWS_AS(deserialize_model(bytes), FormatError);
    }
    for (std::size_t cut = 0; cut < 14; ++cut) {
      const std::vector<std::uint8_t> bytes(good.begin(), good.begin() + static_cast<long>(cut));
      CHECK_THROWS_AS(deserialize_model(bytes), FormatError);
    }
  }
  SUBCASE("arbitrary truncations never crash") {
    for (std::size_t cut = 0; cut < good.size(); cut += 97) {
      const std::vector<std::uint8_t> bytes(good.begin(), good.begin() + static_cast<long>(cut));
      CHECK_THROWS_AS(deserialize_model(bytes), Error);
    }
  }
}

TEST_CASE("model_info") {
  TempDir dir("bdcd-info");
  const ModelSpec m = build_model({}, 256, 1);
  save_model(m, dir / "m.bdcm");
  const ModelInfo info = model_info(dir / "m.bdcm");

  // Hand sum of the default layer shapes at 256 px:
  // conv 3*3*3*32+32, 3*3*32*64+64, 3*3*64*128+128, 3*3*128*128+128,
  // dense 16*16*128*256+256, 256*10+10.
  const std::uint64_t expected = 896 + 18496 + 73856 + 147584 + 8388864 + 2570;
  CHECK(info.parameter_count == expected);
  CHECK(info.file_size == std::filesystem::file_size(dir / "m.bdcm"));
  CHECK(info.header.at("class_labels") ==
        nlohmann::json({"1", "2", "5", "10", "20", "50", "100", "200", "500", "1000"}));
  CHECK(info.header.at("dtype") == "f32");
  CHECK(info.header.at("input_shape") == nlohmann::json({256, 256, 3}));
  CHECK(info.model_id.size() == 8);

  save_model(load_model(dir / "m.bdcm"), dir / "again.bdcm");
  const ModelInfo again = model_info(dir / "again.bdcm");
  CHECK(again.to_json() == info.to_json());

  CHECK_THROWS_AS(model_info(dir / "missing.bdcm"), NotFoundError);
  write_bytes(dir / "junk", std::vector<std::uint8_t>(64, 0x41));
  CHECK_THROWS_AS(model_info(dir / "junk"), FormatError);
}
