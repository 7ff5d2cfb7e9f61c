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

#include "bdcd/service.hpp"

#include <httplib.h>

#include <array>
#include <chrono>
#include "json.hpp"

#include "bdcd/log.hpp"

namespace bdcd {

using nlohmann::json;
using nlohmann::ordered_json;

namespace {

constexpr char kAlphabet[] =
    "ABCDEFGHIJKLMNOPQRSTUVWXYZabcdefghijklmnopqrstuvwxyz0123456789+/";

// Largest base64 text that can decode to kMaxImageBytes, plus slack for
// whitespace and a data-URL prefix.
constexpr std::size_t kMaxBase64Chars = (kMaxImageBytes + 2) / 3 * 4 + 4096;

}  // namespace

std::optional<std::vector<std::uint8_t>> base64_decode(std::string_view text) {
  static const std::array<int, 256> table = [] {
    std::array<int, 256> t{};
    t.fill(-1);
    for (int i = 0; i < 64; ++i) t[static_cast<unsigned char>(kAlphabet[i])] = i;
    return t;
  }();

  if (text.starts_with("data:")) {
    const auto comma = text.find(',');
    if (comma == std::string_view::npos ||
        text.substr(0, comma).find(";base64") == std::string_view::npos) {
      return std::nullopt;
    }
    text.remove_prefix(comma + 1);
  }

  std::vector<std::uint8_t> out;
  out.reserve(text.size() / 4 * 3);
  std::uint32_t acc = 0;
  int bits = 0;
  std::size_t symbols = 0;
  std::size_t padding = 0;
  for (char ch : text) {
    if (ch == ' ' || ch == '\n' || ch == '\r' || ch == '\t') continue;
    if (ch == '=') {
      ++padding;
      continue;
    }
    const int v = table[static_cast<unsigned char>(ch)];
    if (v < 0 || padding > 0) return std::nullopt;
    acc = (acc << 6) | static_cast<std::uint32_t>(v);
    bits += 6;
    ++symbols;
    if (bits >= 8) {
      bits -= 8;
      out.push_back(static_cast<std::uint8_t>(acc >> bits));
      acc &= (1u << bits) - 1u;
    }
  }
  const std::size_t tail = symbols % 4;
  if (tail == 1 || padding > 2) return std::nullopt;
  if (padding > 0 && (symbols + padding) % 4 != 0) return std::nullopt;
  // Leftover bits of a final partial group must be zero.
  if (acc != 0) return std::nullopt;
  return out;
}

std::string base64_encode(std::span<const std::uint8_t> bytes) {
  std::string out;
  out.reserve((bytes.size() + 2) / 3 * 4);
  std::size_t i = 0;
  for (; i + 2 < bytes.size(); i += 3) {
    const std::uint32_t v = (bytes[i] << 16) | (bytes[i + 1] << 8) | bytes[i + 2];
    out += kAlphabet[(v >> 18) & 63];
    out += kAlphabet[(v >> 12) & 63];
    out += kAlphabet[(v >> 6) & 63];
    out += kAlphabet[v & 63];
  }
  if (i + 1 == bytes.size()) {
    const std::uint32_t v = bytes[i] << 16;
    out += kAlphabet[(v >> 18) & 63];
    out += kAlphabet[(v >> 12) & 63];
    out += "==";
  } else if (i + 2 == bytes.size()) {
    const std::uint32_t v = (bytes[i] << 16) | (bytes[i + 1] << 8);
    out += kAlphabet[(v >> 18) & 63];
    out += kAlphabet[(v >> 12) & 63];
    out += kAlphabet[(v >> 6) & 63];
    out += '=';
  }
  return out;
}

HttpReply error_reply(int status, std::string_view code, std::string_view message) {
  return {status, json{{"error", code}, {"message", message}}.dump()};
}

ClassifierService::ClassifierService(ModelSpec model, ModelInfo info)
    : model_(std::move(model)), info_(std::move(info)) {
  model_.validate();
}

std::shared_ptr<const ClassifierService> ClassifierService::from_file(
    const std::filesystem::path& path) {
  ModelInfo info = model_info(path);
  return std::make_shared<const ClassifierService>(load_model(path), std::move(info));
}

HttpReply ClassifierService::health() const { return {200, R"({"status":"ok"})"}; }

HttpReply ClassifierService::model_reply() const { return {200, info_.to_json().dump()}; }

HttpReply ClassifierService::classify_json(std::string_view body) const {
  const json request = json::parse(body, nullptr, /*allow_exceptions=*/false);
  if (request.is_discarded() || !request.is_object()) {
    return error_reply(400, "bad_request", "body must be a JSON object");
  }
  const auto field = request.find("image_b64");
  if (field == request.end() || !field->is_string()) {
    return error_reply(400, "bad_request", "missing string field image_b64");
  }
  const auto& text = field->get_ref<const std::string&>();
  if (text.size() > kMaxBase64Chars) {
    return error_reply(413, "payload_too_large", "image exceeds 10 MiB");
  }
  const auto bytes = base64_decode(text);
  if (!bytes) return error_reply(400, "bad_image", "image_b64 is not valid base64");
  return classify_image(*bytes);
}

HttpReply ClassifierService::classify_image(std::span<const std::uint8_t> bytes) const {
  const auto start = std::chrono::steady_clock::now();
  if (bytes.size() > kMaxImageBytes) {
    return error_reply(413, "payload_too_large", "image exceeds 10 MiB");
  }
  Prediction p;
  try {
    p = predict_bytes(model_, bytes);
  } catch (const DecodeError& e) {
    return error_reply(400, "bad_image", e.what());
  }

  ordered_json probabilities = ordered_json::object();
  for (std::size_t i = 0; i < p.probabilities.size(); ++i) {
    probabilities[model_.vocab.name(i)] = p.probabilities[i];
  }
  ordered_json top = ordered_json::array();
  for (const auto& [label, prob] : p.top_k(model_.vocab, model_.vocab.size())) {
    top.push_back({{"label", label}, {"probability", prob}});
  }
  ordered_json reply;
  reply["label"] = p.label;
  reply["confidence"] = p.confidence;
  reply["probabilities"] = std::move(probabilities);
  reply["top_k"] = std::move(top);
  reply["model_id"] = info_.model_id;
  const auto elapsed = std::chrono::steady_clock::now() - start;
  reply["latency_ms"] = std::chrono::duration<double, std::milli>(elapsed).count();
  spdlog::debug("classified {} bytes as {} ({:.4f})", bytes.size(), p.label, p.confidence);
  return {200, reply.dump()};
}

struct HttpServer::Impl {
  std::shared_ptr<const ClassifierService> service;
  httplib::Server server;
};

namespace {

void send(httplib::Response& res, const HttpReply& reply) {
  res.status = reply.status;
  res.set_content(reply.body, "application/json");
}

}  // namespace

HttpServer::HttpServer(std::shared_ptr<const ClassifierService> service)
    : impl_(std::make_unique<Impl>()) {
  impl_->service = std::move(service);
  auto& svr = impl_->server;
  const ClassifierService* svc = impl_->service.get();

  // Room for a 10 MiB image as base64 inside JSON or multipart framing.
  svr.set_payload_max_length(kMaxBase64Chars + 64 * 1024);
  // SO_REUSEADDR only, so binding a busy port fails.
  svr.set_socket_options([](int sock) {
    int yes = 1;
    setsockopt(sock, SOL_SOCKET, SO_REUSEADDR, &yes, sizeof(yes));
  });
  svr.set_default_headers({{"Access-Control-Allow-Origin", "*"},
                           {"Access-Control-Allow-Methods", "GET, POST, OPTIONS"},
                           {"Access-Control-Allow-Headers", "Content-Type"}});

  svr.Get("/v1/health",
          [svc](const httplib::Request&, httplib::Response& res) { send(res, svc->health()); });
  svr.Get("/v1/model", [svc](const httplib::Request&, httplib::Response& res) {
    send(res, svc->model_reply());
  });
  svr.Post("/v1/classify", [svc](const httplib::Request& req, httplib::Response& res) {
    if (req.is_multipart_form_data()) {
      if (!req.has_file("image")) {
        send(res, error_reply(400, "bad_request", "missing multipart field 'image'"));
        return;
      }
      const auto& content = req.get_file_value("image").content;
      send(res, svc->classify_image(std::span<const std::uint8_t>(
                    reinterpret_cast<const std::uint8_t*>(content.data()), content.size())));
      return;
    }
    send(res, svc->classify_json(req.body));
  });
  svr.Options(R"(/v1/.*)",
              [](const httplib::Request&, httplib::Response& res) { res.status = 204; });

  svr.set_error_handler([](const httplib::Request&, httplib::Response& res) {
    if (!res.body.empty()) return httplib::Server::HandlerResponse::Unhandled;
    switch (res.status) {
      case 404:
        send(res, error_reply(404, "not_found", "no such endpoint"));
        break;
      case 405:
        send(res, error_reply(405, "method_not_allowed", "method not allowed"));
        break;
      case 413:
        send(res, error_reply(413, "payload_too_large", "request body too large"));
        break;
      default:
        send(res, error_reply(res.status, "http_error", httplib::status_message(res.status)));
        break;
    }
    return httplib::Server::HandlerResponse::Handled;
  });
  svr.set_exception_handler(
      [](const httplib::Request&, httplib::Response& res, std::exception_ptr ep) {
        std::string what = "internal error";
        try {
          std::rethrow_exception(ep);
        } catch (const std::exception& e) {
          what = e.what();
        } catch (...) {
        }
        spdlog::error("request failed: {}", what);
        send(res, error_reply(500, "internal", what));
      });
  svr.set_logger([](const httplib::Request& req, const httplib::Response& res) {
    spdlog::debug("{} {} -> {}", req.method, req.path, res.status);
  });
}

HttpServer::~HttpServer() { stop(); }

int HttpServer::bind(const std::string& host, int port) {
  int bound = port;
  if (port == 0) {
    bound = impl_->server.bind_to_any_port(host);
    if (bound < 0) bound = 0;
  } else if (!impl_->server.bind_to_port(host, port)) {
    bound = 0;
  }
  if (bound <= 0) {
    throw IoError("cannot listen on " + host + ":" + std::to_string(port) +
                  " (address in use or unavailable)");
  }
  return bound;
}

void HttpServer::listen() { impl_->server.listen_after_bind(); }

void HttpServer::stop() {
  if (impl_ && impl_->server.is_running()) impl_->server.stop();
}

bool HttpServer::is_running() const { return impl_->server.is_running(); }

}  // namespace bdcd
