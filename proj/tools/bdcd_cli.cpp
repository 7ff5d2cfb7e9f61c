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

#include <CLI11.hpp>
#include <fmt/format.h>

#include <csignal>
#include <cstdio>
#include <fstream>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include "bdcd/dataset.hpp"
#include "bdcd/errors.hpp"
#include "bdcd/log.hpp"
#include "bdcd/metrics.hpp"
#include "bdcd/model.hpp"
#include "bdcd/model_format.hpp"
#include "bdcd/service.hpp"
#include "bdcd/train.hpp"

namespace {

constexpr int kExitOk = 0;
constexpr int kExitRuntime = 1;
constexpr int kExitUsage = 2;

bdcd::HttpServer* g_server = nullptr;

extern "C" void on_signal(int) {
  if (g_server != nullptr) g_server->stop();
}

struct SynthArgs {
  std::string out;
  std::int64_t per_class = 0;
  std::uint64_t seed = 0;
  std::int64_t image_size = 256;
};

struct TrainArgs {
  std::string data;
  std::string out;
  double val_split = 0.2;
  std::int64_t epochs = 16;
  std::int64_t batch_size = 32;
  double lr = 1e-4;
  std::uint64_t seed = 42;
  std::int64_t image_size = 256;
  bool augment = false;
  std::optional<std::int64_t> patience;
  std::string log;
};

struct EvalArgs {
  std::string model;
  std::string data;
  std::string format = "text";
};

struct PredictArgs {
  std::string model;
  std::vector<std::string> images;
  std::size_t top_k = 3;
};

struct CurvesArgs {
  std::string log;
  std::string out;
};

struct ServeArgs {
  std::string model;
  std::string host = "127.0.0.1";
  int port = 8080;
};

int run_synth(const SynthArgs& a) {
  const auto paths = bdcd::synth_generate(a.out, a.per_class, a.seed, a.image_size);
  fmt::print("wrote {} images under {}\n", paths.size(), a.out);
  return kExitOk;
}

int run_train(const TrainArgs& a) {
  if (!(a.val_split > 0.0 && a.val_split < 1.0)) {
    throw bdcd::InvalidParameterError("--val-split must be in (0, 1)");
  }
  bdcd::TrainConfig cfg;
  cfg.learning_rate = a.lr;
  cfg.batch_size = a.batch_size;
  cfg.epochs = a.epochs;
  cfg.seed = a.seed;
  cfg.image_size = a.image_size;
  cfg.early_stop_patience = a.patience;
  if (a.augment) cfg.augment = bdcd::AugmentConfig{};
  cfg.validate();

  const bdcd::ClassVocabulary vocab;
  auto items = bdcd::load_labeled_dataset(a.data, vocab, a.image_size);
  auto split = bdcd::split_dataset(std::move(items), 1.0 - a.val_split, a.seed);
  spdlog::info("loaded {} train / {} val images", split.train.size(), split.val.size());

  std::optional<std::ofstream> log;
  if (!a.log.empty()) {
    log.emplace(a.log, std::ios::trunc);
    if (!*log) throw bdcd::IoError("cannot write " + a.log);
  }

  fmt::print("{:>5} {:>14} {:>10} {:>12} {:>8}\n", "epoch", "train_accuracy", "train_loss",
             "val_accuracy", "val_loss");
  auto model = bdcd::build_model(vocab, a.image_size, a.seed);
  auto result = bdcd::train(std::move(model), split.train, split.val, cfg,
                            [&log](const bdcd::EpochMetrics& m) {
                              fmt::print("{:>5} {:>14.4f} {:>10.4f} {:>12.4f} {:>8.4f}\n",
                                         m.epoch, m.train_accuracy, m.train_loss,
                                         m.val_accuracy, m.val_loss);
                              std::fflush(stdout);
                              if (log) *log << bdcd::metrics_json_line(m) << '\n' << std::flush;
                            });
  bdcd::save_model(result.model, a.out);
  fmt::print("saved {}\n", a.out);
  return kExitOk;
}

int run_eval(const EvalArgs& a) {
  const auto model = bdcd::load_model(a.model);
  const auto items = bdcd::load_labeled_dataset(a.data, model.vocab, model.image_size());
  const auto report = bdcd::evaluate(model, items);
  if (a.format == "json") {
    fmt::print("{}\n", bdcd::format_report_json(report));
  } else if (a.format == "csv") {
    fmt::print("{}", bdcd::format_report_csv(report));
  } else {
    fmt::print("{}", bdcd::format_report_text(report));
  }
  return kExitOk;
}

int run_predict(const PredictArgs& a) {
  const auto model = bdcd::load_model(a.model);
  int status = kExitOk;
  for (const auto& path : a.images) {
    try {
      const auto p = bdcd::predict(model, bdcd::read_image(path));
      fmt::print("{}\t{}\t{:.4f}\n", path, p.label, p.confidence);
      for (const auto& [label, prob] : p.top_k(model.vocab, a.top_k)) {
        fmt::print("  {:>5} {:.4f}\n", label, prob);
      }
    } catch (const bdcd::Error& e) {
      fmt::print(stderr, "{}: {}\n", path, e.what());
      status = kExitRuntime;
    }
  }
  return status;
}

int run_export_curves(const CurvesArgs& a) {
  const auto metrics = bdcd::read_metrics_log(a.log);
  bdcd::export_curves(metrics, a.out);
  fmt::print("wrote {} rows to {}\n", metrics.size(), a.out);
  return kExitOk;
}

int run_serve(const ServeArgs& a) {
  auto service = bdcd::ClassifierService::from_file(a.model);
  bdcd::HttpServer server(service);
  const int port = server.bind(a.host, a.port);
  g_server = &server;
  std::signal(SIGINT, on_signal);
  std::signal(SIGTERM, on_signal);
  fmt::print("serving {} on http://{}:{}\n", a.model, a.host, port);
  std::fflush(stdout);
  server.listen();
  g_server = nullptr;
  return kExitOk;
}

}  // namespace

int main(int argc, char** argv) {
  bdcd::init_logging_from_env();

  CLI::App app{"Bangladeshi banknote classifier"};
  app.name("bdcd");
  app.require_subcommand(1);

  SynthArgs synth;
  auto* synth_cmd = app.add_subcommand("synth", "Render a synthetic banknote dataset");
  synth_cmd->add_option("--out", synth.out, "Output directory")->required();
  synth_cmd->add_option("--per-class", synth.per_class, "Images per class")
      ->required()
      ->check(CLI::PositiveNumber);
  synth_cmd->add_option("--seed", synth.seed, "Random seed")->required();
  synth_cmd->add_option("--image-size", synth.image_size, "Square image size in pixels")
      ->capture_default_str();

  TrainArgs tr;
  std::int64_t patience = 0;
  auto* train_cmd = app.add_subcommand("train", "Train a model on a class-folder dataset");
  train_cmd->add_option("--data", tr.data, "Dataset root")->required();
  train_cmd->add_option("--out", tr.out, "Output model file (.bdcm)")->required();
  train_cmd->add_option("--val-split", tr.val_split)->capture_default_str();
  train_cmd->add_option("--epochs", tr.epochs)->capture_default_str();
  train_cmd->add_option("--batch-size", tr.batch_size)->capture_default_str();
  train_cmd->add_option("--lr", tr.lr)->capture_default_str();
  train_cmd->add_option("--seed", tr.seed)->capture_default_str();
  train_cmd->add_option("--image-size", tr.image_size)->capture_default_str();
  train_cmd->add_flag("--augment", tr.augment, "Enable random augmentation");
  auto* patience_opt = train_cmd->add_option("--early-stop-patience", patience,
                                             "Stop after N epochs without val_loss improvement");
  train_cmd->add_option("--log", tr.log, "JSON-lines metrics log");

  EvalArgs ev;
  auto* eval_cmd = app.add_subcommand("eval", "Evaluate a model on a class-folder dataset");
  eval_cmd->add_option("--model", ev.model)->required();
  eval_cmd->add_option("--data", ev.data)->required();
  eval_cmd->add_option("--format", ev.format)
      ->check(CLI::IsMember({"text", "json", "csv"}))
      ->capture_default_str();

  PredictArgs pr;
  auto* predict_cmd = app.add_subcommand("predict", "Classify image files");
  predict_cmd->add_option("--model", pr.model)->required();
  predict_cmd->add_option("images", pr.images, "Image files")->required();
  predict_cmd->add_option("--top-k", pr.top_k)->capture_default_str();

  CurvesArgs cv;
  auto* curves_cmd = app.add_subcommand("export-curves", "Convert a metrics log to CSV");
  curves_cmd->add_option("--log", cv.log)->required();
  curves_cmd->add_option("--out", cv.out)->required();

  ServeArgs sv;
  auto* serve_cmd = app.add_subcommand("serve", "Run the HTTP classification service");
  serve_cmd->add_option("--model", sv.model)->required();
  serve_cmd->add_option("--host", sv.host)->capture_default_str();
  serve_cmd->add_option("--port", sv.port)->capture_default_str()->check(CLI::Range(0, 65535));

  if (argc < 2) {
    std::cerr << app.help();
    return kExitUsage;
  }
  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    std::cerr << "error: " << e.what() << "\n\n" << app.help();
    return kExitUsage;
  }

  try {
    if (*synth_cmd) return run_synth(synth);
    if (*train_cmd) {
      if (*patience_opt) tr.patience = patience;
      return run_train(tr);
    }
    if (*eval_cmd) return run_eval(ev);
    if (*predict_cmd) return run_predict(pr);
    if (*curves_cmd) return run_export_curves(cv);
    if (*serve_cmd) return run_serve(sv);
  } catch (const bdcd::Error& e) {
    fmt::print(stderr, "error ({}): {}\n", bdcd::error_code_name(e.code()), e.what());
    return kExitRuntime;
  } catch (const std::exception& e) {
    fmt::print(stderr, "error: {}\n", e.what());
    return kExitRuntime;
  }
  return kExitUsage;
}
