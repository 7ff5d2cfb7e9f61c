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

#include "bdcd/train.hpp"

#include <fmt/format.h>

#include <fstream>
#include <limits>
#include "json.hpp"

#include "bdcd/log.hpp"
#include "bdcd/optim.hpp"

namespace bdcd {

void TrainConfig::validate() const {
  if (!(learning_rate > 0.0)) throw InvalidParameterError("learning rate must be > 0");
  if (batch_size < 1) throw InvalidParameterError("batch size must be >= 1");
  if (epochs < 0) throw InvalidParameterError("epochs must be >= 0");
  if (image_size < 16 || image_size % 16 != 0) {
    throw InvalidParameterError("image size must be a positive multiple of 16");
  }
  if (early_stop_patience && *early_stop_patience < 1) {
    throw InvalidParameterError("early-stop patience must be >= 1");
  }
  if (augment) augment->validate();
}

std::string metrics_json_line(const EpochMetrics& m) {
  return fmt::format(
      "{{\"epoch\":{},\"train_accuracy\":{:.4f},\"train_loss\":{:.4f},"
      "\"val_accuracy\":{:.4f},\"val_loss\":{:.4f}}}",
      m.epoch, m.train_accuracy, m.train_loss, m.val_accuracy, m.val_loss);
}

EpochMetrics parse_metrics_json_line(std::string_view line) {
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(line);
    EpochMetrics m;
    m.epoch = j.at("epoch").get<std::int64_t>();
    m.train_accuracy = j.at("train_accuracy").get<double>();
    m.train_loss = j.at("train_loss").get<double>();
    m.val_accuracy = j.at("val_accuracy").get<double>();
    m.val_loss = j.at("val_loss").get<double>();
    return m;
  } catch (const nlohmann::json::exception& e) {
    throw FormatError(std::string("bad metrics line: ") + e.what());
  }
}

std::vector<EpochMetrics> read_metrics_log(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open " + path);
  std::vector<EpochMetrics> out;
  std::string line;
  while (std::getline(in, line)) {
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    out.push_back(parse_metrics_json_line(line));
  }
  return out;
}

namespace {

struct ParamState {
  std::optional<AdamState<float>> weights;
  std::optional<AdamState<float>> bias;
};

std::size_t count_correct(const Tensor& probs, const std::vector<std::size_t>& labels) {
  const std::int64_t k = probs.dim(1);
  std::size_t correct = 0;
  for (std::size_t i = 0; i < labels.size(); ++i) {
    const auto row = probs.data().subspan(i * static_cast<std::size_t>(k),
                                          static_cast<std::size_t>(k));
    if (argmax<float>(row) == labels[i]) ++correct;
  }
  return correct;
}

}  // namespace

LossAccuracy measure(const ModelSpec& model, std::span<const LabeledImage> items,
                     std::int64_t batch_size) {
  if (items.empty()) throw EmptyDatasetError("cannot measure an empty dataset");
  BatchIterator it(items, batch_size, model.image_size(), model.vocab.size(), 0, 0,
                   std::nullopt, /*shuffle=*/false);
  double loss_sum = 0.0;
  std::size_t correct = 0;
  while (auto batch = it.next()) {
    const Tensor probs = forward(model, std::move(batch->images));
    loss_sum += static_cast<double>(categorical_cross_entropy(probs, batch->onehot)) *
                static_cast<double>(batch->labels.size());
    correct += count_correct(probs, batch->labels);
  }
  const auto n = static_cast<double>(items.size());
  return {loss_sum / n, static_cast<double>(correct) / n};
}

TrainResult train(ModelSpec model, std::span<const LabeledImage> train_set,
                  std::span<const LabeledImage> val_set, const TrainConfig& cfg,
                  const EpochCallback& on_epoch) {
  cfg.validate();
  model.validate();
  if (train_set.empty()) throw EmptyDatasetError("training set is empty");
  if (val_set.empty()) throw EmptyDatasetError("validation set is empty");
  if (model.image_size() != cfg.image_size) {
    throw InvalidParameterError("model input size " + std::to_string(model.image_size()) +
                                " differs from the configured image size " +
                                std::to_string(cfg.image_size));
  }

  std::vector<ParamState> states(model.layers.size());
  for (std::size_t i = 0; i < model.layers.size(); ++i) {
    const auto& layer = model.layers[i];
    if (layer.weights) states[i].weights.emplace(layer.weights->shape());
    if (layer.bias) states[i].bias.emplace(layer.bias->shape());
  }

  const std::size_t body = model.layers.size() - 1;  // everything before softmax
  TrainResult result{std::move(model), {}};
  ModelSpec& net = result.model;
  double best_val_loss = std::numeric_limits<double>::infinity();
  std::int64_t epochs_since_best = 0;

  for (std::int64_t epoch = 1; epoch <= cfg.epochs; ++epoch) {
    BatchIterator batches(train_set, cfg.batch_size, cfg.image_size, net.vocab.size(),
                          cfg.seed, static_cast<std::uint64_t>(epoch), cfg.augment);
    double loss_sum = 0.0;
    std::size_t correct = 0;
    std::size_t seen = 0;
    std::uint64_t batch_index = 0;
    std::vector<ForwardCache<float>> caches(body);

    while (auto batch = batches.next()) {
      Rng dropout_rng =
          Rng::derive(cfg.seed, {0x44524f50ULL, static_cast<std::uint64_t>(epoch),
                                 batch_index++});
      Tensor x = std::move(batch->images);
      for (std::size_t i = 0; i < body; ++i) {
        auto step = layer_forward(net.layers[i], std::move(x), Mode::kTrain, &dropout_rng);
        caches[i] = std::move(step.cache);
        x = std::move(step.output);
      }
      const Tensor probs = softmax(x);
      const std::size_t b = batch->labels.size();
      loss_sum += static_cast<double>(categorical_cross_entropy(probs, batch->onehot)) *
                  static_cast<double>(b);
      correct += count_correct(probs, batch->labels);
      seen += b;

      Tensor grad = softmax_ce_grad(probs, batch->onehot);
      for (std::size_t i = body; i-- > 0;) {
        auto& layer = net.layers[i];
        LayerGrads<float> g = layer_backward(layer, std::move(caches[i]), grad);
        if (g.weight_grad) {
          adam_step(*layer.weights, *g.weight_grad, *states[i].weights, cfg.learning_rate);
          adam_step(*layer.bias, *g.bias_grad, *states[i].bias, cfg.learning_rate);
        }
        grad = std::move(g.input_grad);
      }
    }

    const LossAccuracy val = measure(net, val_set, cfg.batch_size);
    EpochMetrics m;
    m.epoch = epoch;
    m.train_accuracy = static_cast<double>(correct) / static_cast<double>(seen);
    m.train_loss = loss_sum / static_cast<double>(seen);
    m.val_accuracy = val.accuracy;
    m.val_loss = val.loss;
    result.metrics.push_back(m);
    spdlog::info("epoch {:>2}  train_acc {:.4f}  train_loss {:.4f}  val_acc {:.4f}  "
                 "val_loss {:.4f}",
                 m.epoch, m.train_accuracy, m.train_loss, m.val_accuracy, m.val_loss);
    if (on_epoch) on_epoch(m);

    if (m.val_loss < best_val_loss) {
      best_val_loss = m.val_loss;
      epochs_since_best = 0;
    } else if (cfg.early_stop_patience && ++epochs_since_best >= *cfg.early_stop_patience) {
      spdlog::info("early stop: val_loss has not improved for {} epochs",
                   epochs_since_best);
      break;
    }
  }
  return result;
}

}  // namespace bdcd
