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

#include "bdcd/model_format.hpp"

#include <zlib.h>

#include <bit>
#include <cstring>
#include <fmt/format.h>
#include <fstream>
#include <iterator>
#include <optional>

namespace bdcd {

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

constexpr std::size_t kPreambleSize = 4 + 2 + 4;
constexpr std::size_t kFooterSize = 4;

template <typename U>
void put_le(std::vector<std::uint8_t>& out, U value) {
  for (std::size_t i = 0; i < sizeof(U); ++i) {
    out.push_back(static_cast<std::uint8_t>(value >> (8 * i)));
  }
}

template <typename U>
U get_le(const std::uint8_t* p) {
  U value = 0;
  for (std::size_t i = 0; i < sizeof(U); ++i) value |= static_cast<U>(p[i]) << (8 * i);
  return value;
}

// Bounds-checked little-endian cursor. Running off the end is a truncated
// file, reported as FormatError.
class Reader {
 public:
  Reader(std::span<const std::uint8_t> bytes) : bytes_(bytes) {}

  std::size_t pos() const noexcept { return pos_; }
  std::size_t remaining() const noexcept { return bytes_.size() - pos_; }

  std::span<const std::uint8_t> take(std::size_t n) {
    if (n > remaining()) {
      throw FormatError(fmt::format("truncated model file: need {} bytes at offset {}, "
                                    "{} available",
                                    n, pos_, remaining()));
    }
    auto out = bytes_.subspan(pos_, n);
    pos_ += n;
    return out;
  }

  template <typename U>
  U read() {
    return get_le<U>(take(sizeof(U)).data());
  }

 private:
  std::span<const std::uint8_t> bytes_;
  std::size_t pos_ = 0;
};

struct ParamDecl {
  std::size_t layer;
  bool is_bias;
  Shape shape;
};

json layer_descriptor(const LayerParams<float>& layer) {
  json d;
  d["kind"] = layer_kind_name(layer.kind);
  switch (layer.kind) {
    case LayerKind::kConv2d:
      d["stride"] = layer.hyper.stride;
      d["padding"] = padding_name(layer.hyper.padding);
      break;
    case LayerKind::kMaxPool:
      d["window"] = layer.hyper.pool_window;
      d["stride"] = layer.hyper.pool_stride;
      break;
    case LayerKind::kDropout:
      d["rate"] = layer.hyper.dropout_rate;
      break;
    default:
      break;
  }
  if (layer.weights) {
    d["params"] = json::array({{{"name", "weights"}, {"shape", layer.weights->shape()}},
                               {{"name", "bias"}, {"shape", layer.bias->shape()}}});
  }
  return d;
}

Shape parse_shape(const json& j) {
  Shape shape = j.get<Shape>();
  if (shape.empty()) throw FormatError("empty parameter shape in header");
  for (std::int64_t d : shape) {
    if (d < 1) throw FormatError("non-positive dimension in header shape");
  }
  return shape;
}

// Layer skeletons (no parameter data) and the ordered parameter list.
struct HeaderLayout {
  ModelSpec model;
  std::vector<ParamDecl> params;
};

HeaderLayout parse_header(const json& h) {
  try {
    if (h.at("format_version").get<int>() != kModelFormatVersion) {
      throw VersionError("unsupported header format_version");
    }
    if (h.at("dtype").get<std::string>() != "f32") {
      throw FormatError("unsupported dtype " + h.at("dtype").get<std::string>());
    }
    HeaderLayout out;
    out.model.vocab = ClassVocabulary(h.at("class_labels").get<std::vector<std::string>>());
    out.model.input_shape = parse_shape(h.at("input_shape"));
    out.model.architecture = h.value("architecture", "");
    for (const json& d : h.at("layers")) {
      LayerParams<float> layer;
      layer.kind = layer_kind_from_name(d.at("kind").get<std::string>());
      switch (layer.kind) {
        case LayerKind::kConv2d:
          layer.hyper.stride = d.at("stride").get<std::int64_t>();
          layer.hyper.padding = padding_from_name(d.at("padding").get<std::string>());
          break;
        case LayerKind::kMaxPool:
          layer.hyper.pool_window = d.at("window").get<std::int64_t>();
          layer.hyper.pool_stride = d.at("stride").get<std::int64_t>();
          break;
        case LayerKind::kDropout:
          layer.hyper.dropout_rate = d.at("rate").get<double>();
          break;
        default:
          break;
      }
      const bool has_params = layer.kind == LayerKind::kConv2d || layer.kind == LayerKind::kDense;
      if (has_params != d.contains("params")) {
        throw FormatError("layer " + d.at("kind").get<std::string>() +
                          " has an unexpected parameter list");
      }
      if (has_params) {
        const json& ps = d.at("params");
        if (ps.size() != 2 || ps[0].at("name") != "weights" || ps[1].at("name") != "bias") {
          throw FormatError("parameter list must be [weights, bias]");
        }
        const std::size_t index = out.model.layers.size();
        out.params.push_back({index, false, parse_shape(ps[0].at("shape"))});
        out.params.push_back({index, true, parse_shape(ps[1].at("shape"))});
      }
      out.model.layers.push_back(std::move(layer));
    }
    return out;
  } catch (const json::exception& e) {
    throw FormatError(std::string("malformed model header: ") + e.what());
  } catch (const InvalidParameterError& e) {
    throw FormatError(std::string("invalid model header: ") + e.what());
  }
}

struct Preamble {
  bool magic_ok = false;
  std::uint16_t version = 0;
  std::uint32_t header_len = 0;
};

Preamble read_preamble(Reader& r) {
  Preamble p;
  const auto magic = r.take(4);
  p.magic_ok = std::memcmp(magic.data(), kModelMagic, 4) == 0;
  p.version = r.read<std::uint16_t>();
  p.header_len = r.read<std::uint32_t>();
  return p;
}

json parse_header_json(std::span<const std::uint8_t> text) {
  json h = json::parse(text.begin(), text.end(), nullptr, /*allow_exceptions=*/false);
  if (h.is_discarded() || !h.is_object()) throw FormatError("model header is not JSON");
  return h;
}

// Full parse of a file whose CRC has already been verified.
ModelSpec parse_verified(std::span<const std::uint8_t> body) {
  Reader r(body);
  const Preamble pre = read_preamble(r);
  if (!pre.magic_ok) throw FormatError("bad magic: not a BDCM model file");
  if (pre.version != kModelFormatVersion) {
    throw VersionError(fmt::format("unsupported model format version {}", pre.version));
  }
  HeaderLayout layout = parse_header(parse_header_json(r.take(pre.header_len)));
  for (const ParamDecl& decl : layout.params) {
    const std::uint64_t len = r.read<std::uint64_t>();
    const std::uint64_t expected = shape_numel(decl.shape) * sizeof(float);
    if (len % 4 != 0 || len != expected) {
      throw FormatError(fmt::format("blob length {} does not match header shape {}", len,
                                    shape_to_string(decl.shape)));
    }
    const auto raw = r.take(static_cast<std::size_t>(len));
    std::vector<float> values(static_cast<std::size_t>(len / 4));
    for (std::size_t i = 0; i < values.size(); ++i) {
      values[i] = std::bit_cast<float>(get_le<std::uint32_t>(raw.data() + 4 * i));
    }
    auto& layer = layout.model.layers[decl.layer];
    (decl.is_bias ? layer.bias : layer.weights) = Tensor(decl.shape, std::move(values));
  }
  if (r.remaining() != 0) {
    throw FormatError(fmt::format("{} unexpected bytes after the last blob", r.remaining()));
  }
  try {
    for (const auto& layer : layout.model.layers) layer.validate();
    layout.model.validate();
  } catch (const Error& e) {
    throw FormatError(std::string("inconsistent model: ") + e.what());
  }
  return std::move(layout.model);
}

// Explains a CRC mismatch. A file that is a clean prefix of a valid model
// (intact header, every blob length prefix present so far agreeing with
// it, shorter than the header implies) is reported as truncated. A file
// that fails both the magic and the version/header checks is not a model
// at all. Anything else is corruption.
[[noreturn]] void raise_crc_mismatch(std::span<const std::uint8_t> bytes) {
  Reader r(bytes);
  const Preamble pre = read_preamble(r);
  std::optional<HeaderLayout> layout;
  if (pre.header_len <= r.remaining()) {
    try {
      layout = parse_header(parse_header_json(r.take(pre.header_len)));
    } catch (const Error&) {
    }
  }
  if (!pre.magic_ok && (pre.version != kModelFormatVersion || !layout)) {
    throw FormatError("bad magic: not a BDCM model file");
  }
  if (pre.magic_ok && pre.version == kModelFormatVersion && layout) {
    bool prefixes_agree = true;
    std::uint64_t expected_total = r.pos() + kFooterSize;
    std::size_t pos = r.pos();
    for (const ParamDecl& decl : layout->params) {
      const std::uint64_t len = shape_numel(decl.shape) * sizeof(float);
      if (pos + 8 <= bytes.size() && get_le<std::uint64_t>(bytes.data() + pos) != len) {
        prefixes_agree = false;
      }
      pos += 8 + len;
      expected_total += 8 + len;
    }
    if (prefixes_agree && expected_total > bytes.size()) {
      throw FormatError(fmt::format("truncated model file: {} of {} bytes", bytes.size(),
                                    expected_total));
    }
  }
  throw CorruptionError("model file checksum mismatch");
}

std::vector<std::uint8_t> read_file(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open " + path.string());
  return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

}  // namespace

std::uint32_t crc32_ieee(std::span<const std::uint8_t> bytes) {
  uLong crc = crc32(0L, Z_NULL, 0);
  std::size_t offset = 0;
  while (offset < bytes.size()) {
    const auto chunk = static_cast<uInt>(std::min<std::size_t>(bytes.size() - offset, 1u << 30));
    crc = crc32(crc, bytes.data() + offset, chunk);
    offset += chunk;
  }
  return static_cast<std::uint32_t>(crc);
}

json model_header(const ModelSpec& model) {
  json h;
  h["format_version"] = kModelFormatVersion;
  h["dtype"] = "f32";
  h["class_labels"] = model.vocab.names();
  h["input_shape"] = model.input_shape;
  h["architecture"] = model.architecture;
  h["blob_order"] = "layer order, weights then bias";
  json layers = json::array();
  for (const auto& layer : model.layers) layers.push_back(layer_descriptor(layer));
  h["layers"] = std::move(layers);
  return h;
}

std::vector<std::uint8_t> serialize_model(const ModelSpec& model) {
  model.validate();
  const std::string header = model_header(model).dump();
  std::vector<std::uint8_t> out;
  out.reserve(kPreambleSize + header.size() + model.parameter_count() * 4 +
              model.layers.size() * 16 + kFooterSize);
  out.insert(out.end(), kModelMagic, kModelMagic + 4);
  put_le<std::uint16_t>(out, kModelFormatVersion);
  put_le<std::uint32_t>(out, static_cast<std::uint32_t>(header.size()));
  out.insert(out.end(), header.begin(), header.end());
  auto put_blob = [&out](const Tensor& t) {
    put_le<std::uint64_t>(out, static_cast<std::uint64_t>(t.size()) * sizeof(float));
    for (float v : t.data()) put_le<std::uint32_t>(out, std::bit_cast<std::uint32_t>(v));
  };
  for (const auto& layer : model.layers) {
    if (!layer.weights) continue;
    put_blob(*layer.weights);
    put_blob(*layer.bias);
  }
  put_le<std::uint32_t>(out, crc32_ieee(out));
  return out;
}

ModelSpec deserialize_model(std::span<const std::uint8_t> bytes) {
  if (bytes.size() < kPreambleSize + kFooterSize) {
    throw FormatError(fmt::format("truncated model file: only {} bytes", bytes.size()));
  }
  const auto body = bytes.first(bytes.size() - kFooterSize);
  const auto stored = get_le<std::uint32_t>(bytes.data() + body.size());
  if (crc32_ieee(body) != stored) raise_crc_mismatch(bytes);
  return parse_verified(body);
}

void save_model(const ModelSpec& model, const fs::path& path) {
  const auto bytes = serialize_model(model);
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw IoError("cannot write " + path.string());
  out.write(reinterpret_cast<const char*>(bytes.data()),
            static_cast<std::streamsize>(bytes.size()));
  if (!out) throw IoError("short write to " + path.string());
}

ModelSpec load_model(const fs::path& path) {
  std::error_code ec;
  if (!fs::is_regular_file(path, ec)) throw NotFoundError("model not found: " + path.string());
  const auto bytes = read_file(path);
  return deserialize_model(bytes);
}

json ModelInfo::to_json() const {
  return {{"header", header},
          {"parameter_count", parameter_count},
          {"file_size", file_size},
          {"model_id", model_id}};
}

ModelInfo model_info(const fs::path& path) {
  std::error_code ec;
  if (!fs::is_regular_file(path, ec)) throw NotFoundError("model not found: " + path.string());
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open " + path.string());
  std::vector<std::uint8_t> pre(kPreambleSize);
  in.read(reinterpret_cast<char*>(pre.data()), static_cast<std::streamsize>(pre.size()));
  if (in.gcount() != static_cast<std::streamsize>(pre.size())) {
    throw FormatError("truncated model file preamble");
  }
  Reader r(pre);
  const Preamble p = read_preamble(r);
  if (!p.magic_ok) throw FormatError("bad magic: not a BDCM model file");
  if (p.version != kModelFormatVersion) {
    throw VersionError(fmt::format("unsupported model format version {}", p.version));
  }
  std::vector<std::uint8_t> header(p.header_len);
  in.read(reinterpret_cast<char*>(header.data()), static_cast<std::streamsize>(header.size()));
  if (in.gcount() != static_cast<std::streamsize>(header.size())) {
    throw FormatError("truncated model header");
  }
  ModelInfo info;
  info.header = parse_header_json(header);
  const HeaderLayout layout = parse_header(info.header);
  for (const ParamDecl& decl : layout.params) info.parameter_count += shape_numel(decl.shape);
  info.file_size = fs::file_size(path);
  info.model_id = fmt::format("{:08x}", crc32_ieee(header));
  return info;
}

}  // namespace bdcd
