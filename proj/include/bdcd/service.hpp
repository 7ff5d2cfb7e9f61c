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

#ifndef BDCD_SERVICE_HPP_
#define BDCD_SERVICE_HPP_

#include <cstdint>
#include <filesystem>
#include <memory>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "bdcd/model.hpp"
#include "bdcd/model_format.hpp"

namespace bdcd {

/// Largest accepted decoded image payload.
inline constexpr std::size_t kMaxImageBytes = 10u * 1024u * 1024u;

/// Strict RFC 4648 base64 (standard alphabet, optional '=' padding).
/// Whitespace is ignored; a leading "data:...;base64," prefix is stripped.
/// Returns nullopt on any other character or bad length.
std::optional<std::vector<std::uint8_t>> base64_decode(std::string_view text);
std::string base64_encode(std::span<const std::uint8_t> bytes);

struct HttpReply {
  int status = 200;
  std::string body;  // JSON
};

/// Transport-independent request handling for the classification API. The
/// model is immutable after construction; every method is safe to call
/// concurrently.
class ClassifierService {
 public:
  ClassifierService(ModelSpec model, ModelInfo info);

  static std::shared_ptr<const ClassifierService> from_file(const std::filesystem::path& path);

  const ModelSpec& model() const noexcept { return model_; }
  const ModelInfo& info() const noexcept { return info_; }

  HttpReply health() const;
  HttpReply model_reply() const;
  /// Body of the form {"image_b64": "..."}.
  HttpReply classify_json(std::string_view body) const;
  HttpReply classify_image(std::span<const std::uint8_t> bytes) const;

 private:
  ModelSpec model_;
  ModelInfo info_;
};

HttpReply error_reply(int status, std::string_view code, std::string_view message);

/// HTTP front end over ClassifierService (cpp-httplib, thread pool).
///
///   GET  /v1/health    {"status":"ok"}
///   GET  /v1/model     model_info JSON
///   POST /v1/classify  JSON {"image_b64":...} or multipart field "image"
///
/// Every response carries permissive CORS headers. Non-2xx bodies are
/// {"error": code, "message": text}.
class HttpServer {
 public:
  explicit HttpServer(std::shared_ptr<const ClassifierService> service);
  ~HttpServer();
  HttpServer(const HttpServer&) = delete;
  HttpServer& operator=(const HttpServer&) = delete;

  /// Binds the listening socket; port 0 picks a free port. Throws IoError
  /// when the address is unavailable. Returns the bound port.
  int bind(const std::string& host, int port);

  /// Serves until stop(). bind() must have succeeded.
  void listen();
  void stop();
  bool is_running() const;

 private:
  struct Impl;
  std::unique_ptr<Impl> impl_;
};

}  // namespace bdcd

#endif  // BDCD_SERVICE_HPP_
