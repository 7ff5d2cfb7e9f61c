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

#include <cmath>
#include <fstream>
#include <numeric>

#include "bdcd/dataset.hpp"
#include "bdcd/metrics.hpp"
#include "bdcd/model.hpp"
#include "bdcd/train.hpp"
#include "oracles.hpp"
#include "temp_dir.hpp"

using namespace bdcd;
using bdcd::testing::TempDir;

namespace {

const std::vector<EpochMetrics> kReferenceCurve = {
    {1, 0.4732, 1.4806, 0.8400, 0.4864},  {2, 0.7465, 0.7250, 0.8840, 0.3619},
    {3, 0.8145, 0.5291, 0.9275, 0.2094},  {4, 0.8478, 0.4372, 0.9572, 0.1416},
    {5, 0.8718, 0.3640, 0.9442, 0.1667},  {6, 0.8888, 0.3176, 0.9665, 0.1063},
    {7, 0.9022, 0.2768, 0.9443, 0.2378},  {8, 0.9107, 0.2528, 0.9450, 0.2008},
    {9, 0.9167, 0.2354, 0.9808, 0.0781},  {10, 0.9247, 0.2168, 0.9512, 0.2825},
    {11, 0.9313, 0.1944, 0.9875, 0.0601}, {12, 0.9333, 0.1888, 0.9573, 0.2256},
    {13, 0.9401, 0.1749, 0.9741, 0.1209}, {14, 0.9443, 0.1550, 0.9619, 0.3094},
    {15, 0.9496, 0.1451, 0.9816, 0.0946}, {16, 0.9497, 0.1466, 0.9900, 0.0572},
};

std::vector<LabeledImage> synthetic_items(std::int64_t per_class, std::uint64_t seed,
                                          std::int64_t size) {
  const ClassVocabulary vocab;
  std::vector<LabeledImage> out;
  for (std::size_t c = 0; c < vocab.size(); ++c) {
    for (std::int64_t i = 0; i < per_class; ++i) {
      Rng rng = Rng::derive(seed, {c, static_cast<std::uint64_t>(i)});
      out.push_back({render_synthetic_note(c, vocab, size, rng), c,
                     "mem/" + vocab.name(c) + "/" + std::to_string(i)});
    }
  }
  return out;
}

}  // namespace

TEST_CASE("build_model") {
  const ClassVocabulary vocab;
  SUBCASE("default 256 input") {
    const ModelSpec m = build_model(vocab, 256, 1);
    const auto shapes = m.validate();
    // Shape entering flatten: four halvings of 256.
    bool found = false;
    for (std::size_t i = 0; i < m.layers.size(); ++i) {
      if (m.layers[i].kind == LayerKind::kFlatten) {
        CHECK(shapes[i - 1] == Shape{16, 16, 128});
        found = true;
      }
    }
    CHECK(found);
    CHECK(shapes.back() == Shape{10});
    CHECK(m.layers.back().kind == LayerKind::kSoftmax);
    CHECK(m.parameter_count() == 8632266u);
    CHECK(m.architecture == kDefaultArchitecture);
  }
  SUBCASE("layer sequence") {
    const ModelSpec m = build_model(vocab, 64, 1);
    std::vector<LayerKind> kinds;
    for (const auto& l : m.layers) kinds.push_back(l.kind);
    using K = LayerKind;
    CHECK(kinds == std::vector<K>{K::kConv2d, K::kRelu, K::kMaxPool, K::kConv2d, K::kRelu,
                                  K::kMaxPool, K::kConv2d, K::kRelu, K::kMaxPool, K::kConv2d,
                                  K::kRelu, K::kMaxPool, K::kFlatten, K::kDense, K::kRelu,
                                  K::kDropout, K::kDense, K::kSoftmax});
    for (const auto& l : m.layers) {
      if (l.bias) {
        for (float b : l.bias->data()) CHECK(b == 0.0f);
      }
    }
  }
  SUBCASE("determinism and seeds") {
    CHECK(build_model(vocab, 32, 5) == build_model(vocab, 32, 5));
    CHECK_FALSE(build_model(vocab, 32, 5) == build_model(vocab, 32, 6));
  }
  SUBCASE("image size must be a multiple of 16") {
    CHECK_THROWS_AS(build_model(vocab, 100, 1), InvalidParameterError);
    CHECK_THROWS_AS(build_model(vocab, 0, 1), InvalidParameterError);
  }
}

TEST_CASE("predict") {
  const ClassVocabulary vocab;
  const ModelSpec m = build_model(vocab, 256, 2);
  Rng note_rng = Rng::derive(7, {3, 0});
  const Image img = render_synthetic_note(3, vocab, 256, note_rng);

  const Prediction p = predict(m, img);
  double sum = 0.0;
  for (float v : p.probabilities) sum += v;
  CHECK(std::abs(sum - 1.0) <= 1e-4);
  const std::size_t best = argmax<float>(p.probabilities);
  CHECK(p.index == best);
  CHECK(p.label == vocab.name(best));
  CHECK(p.confidence == p.probabilities[best]);
  for (float v : p.probabilities) {
    CHECK(v >= 0.02f);
    CHECK(v <= 0.30f);
  }
  CHECK(predict(m, img) == p);

  const auto top = p.top_k(vocab, 3);
  REQUIRE(top.size() == 3);
  CHECK(top[0].first == p.label);
  CHECK(top[0].second >= top[1].second);
  CHECK(top[1].second >= top[2].second);
  CHECK(p.top_k(vocab, 50).size() == 10);

  const std::vector<std::uint8_t> junk{0x89, 'P', 'N', 'G'};
  CHECK_THROWS_AS(predict_bytes(m, junk), DecodeError);
}

TEST_CASE("classification_report") {
  SUBCASE("worked example for one class") {
    ConfusionMatrix cm(10);
    cm.add(0, 0, 9);  // TP
    cm.add(1, 0, 1);  // FP
    cm.add(0, 2, 3);  // FN
    const auto r = classification_report(cm);
    CHECK(r.per_class[0].precision == doctest::Approx(0.9));
    CHECK(r.per_class[0].recall == doctest::Approx(0.75));
    CHECK(r.per_class[0].f1 == doctest::Approx(0.81818).epsilon(1e-5));
    CHECK(r.per_class[0].tn == 0);
  }
  SUBCASE("zero-support class is degenerate") {
    ConfusionMatrix cm(10);
    cm.add(1, 1, 5);
    const auto r = classification_report(cm);
    CHECK(r.per_class[3].recall == 0.0);
    CHECK(r.per_class[3].support == 0);
    CHECK(r.per_class[3].degenerate);
    CHECK_FALSE(r.per_class[1].degenerate);
  }
  SUBCASE("exact agreement with pairwise counting on random pairs") {
    Rng rng(10000);
    std::vector<std::size_t> truth(10000), pred(10000);
    ConfusionMatrix cm(10);
    for (std::size_t i = 0; i < truth.size(); ++i) {
      truth[i] = rng.below(10);
      pred[i] = rng.bernoulli(0.6) ? truth[i] : rng.below(10);
      cm.add(truth[i], pred[i]);
    }
    const auto r = classification_report(cm);
    std::int64_t correct = 0;
    for (std::size_t i = 0; i < truth.size(); ++i) correct += truth[i] == pred[i];
    CHECK(r.accuracy == static_cast<double>(correct) / 10000.0);
    CHECK(cm.total() == 10000);
    for (std::size_t c = 0; c < 10; ++c) {
      const auto o = testing::count_pairs(truth, pred, c);
      const auto& m = r.per_class[c];
      CHECK(m.tp == o.tp);
      CHECK(m.fp == o.fp);
      CHECK(m.fn == o.fn);
      CHECK(m.tn == o.tn);
      const double p = double(o.tp) / double(o.tp + o.fp);
      const double rc = double(o.tp) / double(o.tp + o.fn);
      CHECK(m.precision == p);
      CHECK(m.recall == rc);
      CHECK(m.f1 == 2.0 * p * rc / (p + rc));
    }
  }
  SUBCASE("bad cells") {
    ConfusionMatrix cm(3);
    CHECK_THROWS_AS(cm.add(3, 0), InvalidParameterError);
    CHECK_THROWS_AS(cm.add(0, 0, -1), InvalidParameterError);
  }
}

TEST_CASE("evaluate with predictor stand-ins") {
  const ClassVocabulary vocab;
  std::vector<LabeledImage> items;
  for (std::size_t c = 0; c < 10; ++c) {
    for (int i = 0; i < 5; ++i) items.push_back({Image(1, 1), c, ""});
  }

  SUBCASE("oracle predictor") {
    const auto e = evaluate(items, [](const LabeledImage& it) { return it.label; }, vocab);
    CHECK(e.report.accuracy == 1.0);
    for (std::size_t c = 0; c < 10; ++c) {
      CHECK(e.confusion.at(c, c) == 5);
      CHECK(e.report.per_class[c].precision == 1.0);
      CHECK(e.report.per_class[c].recall == 1.0);
      CHECK(e.report.per_class[c].f1 == 1.0);
    }
  }
  SUBCASE("constant predictor") {
    const auto e = evaluate(items, [](const LabeledImage&) { return std::size_t{0}; }, vocab);
    CHECK(e.report.per_class[0].recall == 1.0);
    CHECK(e.report.per_class[0].precision == doctest::Approx(0.1));
    for (std::size_t c = 1; c < 10; ++c) CHECK(e.report.per_class[c].recall == 0.0);
    CHECK(e.report.accuracy == doctest::Approx(0.1));
    for (std::size_t c = 0; c < 10; ++c) CHECK(e.confusion.row_sum(c) == e.report.per_class[c].support);
  }
  SUBCASE("random predictor: accuracy equals trace over total") {
    Rng rng(3);
    const auto e = evaluate(items, [&rng](const LabeledImage&) { return rng.below(10); }, vocab);
    CHECK(e.report.accuracy == double(e.confusion.trace()) / double(e.confusion.total()));
    CHECK(e.confusion.total() == 50);
  }
  SUBCASE("empty dataset") {
    CHECK_THROWS_AS(evaluate({}, [](const LabeledImage&) { return std::size_t{0}; }, vocab),
                    EmptyDatasetError);
  }
  SUBCASE("report formatters") {
    const auto e = evaluate(items, [](const LabeledImage& it) { return it.label; }, vocab);
    CHECK(format_report_text(e).find("accuracy 1.0000") != std::string::npos);
    CHECK(format_report_json(e).find("\"macro_f1\": 1.0") != std::string::npos);
    const std::string csv = format_report_csv(e);
    CHECK(csv.rfind("class,precision,recall,f1,support", 0) == 0);
    CHECK(std::count(csv.begin(), csv.end(), '\n') == 12);
  }
}

TEST_CASE("curve export") {
  TempDir dir("bdcd-curves");
  SUBCASE("reference 16-epoch curve round trips") {
    const auto path = dir / "curves.csv";
    export_curves(kReferenceCurve, path);
    std::ifstream in(path);
    std::string text{std::istreambuf_iterator<char>(in), {}};
    CHECK(std::count(text.begin(), text.end(), '\n') == 17);
    CHECK(text.find("16,0.9497,0.1466,0.9900,0.0572\n") != std::string::npos);
    CHECK(read_curves_csv(path) == kReferenceCurve);
  }
  SUBCASE("empty metrics write only the header") {
    export_curves({}, dir / "empty.csv");
    std::ifstream in(dir / "empty.csv");
    std::string text{std::istreambuf_iterator<char>(in), {}};
    CHECK(text == "epoch,train_accuracy,train_loss,val_accuracy,val_loss\n");
  }
  SUBCASE("unwritable path") {
    CHECK_THROWS_AS(export_curves(kReferenceCurve, dir / "missing" / "x.csv"), IoError);
  }
  SUBCASE("json lines") {
    const std::string line = metrics_json_line(kReferenceCurve.back());
    CHECK(line ==
          R"({"epoch":16,"train_accuracy":0.9497,"train_loss":0.1466,"val_accuracy":0.9900,"val_loss":0.0572})");
    CHECK(parse_metrics_json_line(line) == kReferenceCurve.back());
    CHECK_THROWS_AS(parse_metrics_json_line("{\"epoch\":1}"), FormatError);
  }
}

TEST_CASE("train") {
  const ClassVocabulary vocab;
  const auto train_items = synthetic_items(6, 1, 16);
  const auto val_items = synthetic_items(2, 2, 16);
  TrainConfig cfg;
  cfg.image_size = 16;
  cfg.batch_size = 16;

  SUBCASE("zero epochs leaves the model unchanged") {
    cfg.epochs = 0;
    const ModelSpec m = build_model(vocab, 16, 4);
    const auto r = train(m, train_items, val_items, cfg);
    CHECK(r.metrics.empty());
    CHECK(r.model == m);
  }
  SUBCASE("one metrics row per epoch, finite values, deterministic") {
    cfg.epochs = 3;
    cfg.learning_rate = 1e-3;
    std::vector<EpochMetrics> streamed;
    const auto a = train(build_model(vocab, 16, 4), train_items, val_items, cfg,
                         [&](const EpochMetrics& m) { streamed.push_back(m); });
    const auto b = train(build_model(vocab, 16, 4), train_items, val_items, cfg);
    REQUIRE(a.metrics.size() == 3);
    CHECK(streamed == a.metrics);
    CHECK(a.metrics == b.metrics);
    CHECK(a.model == b.model);
    for (std::size_t i = 0; i < a.metrics.size(); ++i) {
      const auto& m = a.metrics[i];
      CHECK(m.epoch == static_cast<std::int64_t>(i + 1));
      CHECK(std::isfinite(m.train_loss));
      CHECK(m.train_loss >= 0.0);
      CHECK(m.val_loss >= 0.0);
      CHECK(m.train_accuracy >= 0.0);
      CHECK(m.train_accuracy <= 1.0);
      CHECK(m.val_accuracy >= 0.0);
      CHECK(m.val_accuracy <= 1.0);
    }
    CHECK(a.metrics.back().train_loss < a.metrics.front().train_loss);
    CHECK_FALSE(a.model == build_model(vocab, 16, 4));
  }
  SUBCASE("early stopping halts once val_loss stalls") {
    cfg.epochs = 50;
    cfg.learning_rate = 0.05;  // large enough to make val_loss bounce
    cfg.early_stop_patience = 1;
    const auto r = train(build_model(vocab, 16, 4), train_items, val_items, cfg);
    CHECK(r.metrics.size() < 50);
  }
  SUBCASE("errors") {
    cfg.epochs = 1;
    CHECK_THROWS_AS(train(build_model(vocab, 16, 4), {}, val_items, cfg), EmptyDatasetError);
    CHECK_THROWS_AS(train(build_model(vocab, 16, 4), train_items, {}, cfg), EmptyDatasetError);
    CHECK_THROWS_AS(train(build_model(vocab, 32, 4), train_items, val_items, cfg),
                    InvalidParameterError);
    cfg.learning_rate = 0.0;
    CHECK_THROWS_AS(cfg.validate(), InvalidParameterError);
  }
}
