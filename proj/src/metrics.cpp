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

#include "bdcd/metrics.hpp"

#include <fmt/format.h>

#include <fstream>
#include "json.hpp"
#include <sstream>

namespace bdcd {

ConfusionMatrix::ConfusionMatrix(std::size_t num_classes)
    : k_(num_classes), cells_(num_classes * num_classes, 0) {
  if (num_classes == 0) throw InvalidParameterError("confusion matrix needs >= 1 class");
}

void ConfusionMatrix::add(std::size_t truth, std::size_t predicted, std::int64_t count) {
  if (truth >= k_ || predicted >= k_) {
    throw InvalidParameterError("class index out of range for the confusion matrix");
  }
  if (count < 0) throw InvalidParameterError("confusion counts must be nonnegative");
  cells_[truth * k_ + predicted] += count;
}

std::int64_t ConfusionMatrix::row_sum(std::size_t truth) const {
  std::int64_t s = 0;
  for (std::size_t j = 0; j < k_; ++j) s += at(truth, j);
  return s;
}

std::int64_t ConfusionMatrix::col_sum(std::size_t predicted) const {
  std::int64_t s = 0;
  for (std::size_t i = 0; i < k_; ++i) s += at(i, predicted);
  return s;
}

std::int64_t ConfusionMatrix::total() const {
  std::int64_t s = 0;
  for (std::int64_t c : cells_) s += c;
  return s;
}

std::int64_t ConfusionMatrix::trace() const {
  std::int64_t s = 0;
  for (std::size_t i = 0; i < k_; ++i) s += at(i, i);
  return s;
}

ClassificationReport classification_report(const ConfusionMatrix& confusion) {
  const std::size_t k = confusion.num_classes();
  const std::int64_t total = confusion.total();
  ClassificationReport report;
  report.per_class.resize(k);
  for (std::size_t c = 0; c < k; ++c) {
    ClassMetrics& m = report.per_class[c];
    m.tp = confusion.at(c, c);
    m.fp = confusion.col_sum(c) - m.tp;
    m.fn = confusion.row_sum(c) - m.tp;
    m.tn = total - m.tp - m.fp - m.fn;
    m.support = m.tp + m.fn;
    auto ratio = [&m](std::int64_t num, std::int64_t den) {
      if (den == 0) {
        m.degenerate = true;
        return 0.0;
      }
      return static_cast<double>(num) / static_cast<double>(den);
    };
    m.precision = ratio(m.tp, m.tp + m.fp);
    m.recall = ratio(m.tp, m.tp + m.fn);
    const double pr = m.precision + m.recall;
    if (pr == 0.0) {
      m.degenerate = true;
      m.f1 = 0.0;
    } else {
      m.f1 = 2.0 * m.precision * m.recall / pr;
    }
    report.macro_precision += m.precision;
    report.macro_recall += m.recall;
    report.macro_f1 += m.f1;
  }
  report.macro_precision /= static_cast<double>(k);
  report.macro_recall /= static_cast<double>(k);
  report.macro_f1 /= static_cast<double>(k);
  report.accuracy =
      total == 0 ? 0.0 : static_cast<double>(confusion.trace()) / static_cast<double>(total);
  return report;
}

EvalReport evaluate(std::span<const LabeledImage> dataset, const Predictor& predictor,
                    const ClassVocabulary& vocab) {
  if (dataset.empty()) throw EmptyDatasetError("cannot evaluate an empty dataset");
  EvalReport out;
  out.confusion = ConfusionMatrix(vocab.size());
  out.labels = vocab.names();
  for (const auto& item : dataset) out.confusion.add(item.label, predictor(item));
  out.report = classification_report(out.confusion);
  return out;
}

EvalReport evaluate(const ModelSpec& model, std::span<const LabeledImage> dataset) {
  return evaluate(
      dataset, [&model](const LabeledImage& item) { return predict(model, item.pixels).index; },
      model.vocab);
}

std::string format_report_text(const EvalReport& r) {
  std::ostringstream out;
  const std::size_t k = r.labels.size();
  out << "Confusion matrix (rows = true, cols = predicted)\n";
  out << fmt::format("{:>8}", "");
  for (const auto& label : r.labels) out << fmt::format("{:>6}", label);
  out << "\n";
  for (std::size_t i = 0; i < k; ++i) {
    out << fmt::format("{:>8}", r.labels[i]);
    for (std::size_t j = 0; j < k; ++j) out << fmt::format("{:>6}", r.confusion.at(i, j));
    out << "\n";
  }
  out << "\nClassification report\n";
  out << fmt::format("{:>8} {:>10} {:>10} {:>10} {:>8}\n", "class", "precision", "recall",
                     "f1-score", "support");
  for (std::size_t i = 0; i < k; ++i) {
    const auto& m = r.report.per_class[i];
    out << fmt::format("{:>8} {:>10.4f} {:>10.4f} {:>10.4f} {:>8}{}\n", r.labels[i],
                       m.precision, m.recall, m.f1, m.support, m.degenerate ? " *" : "");
  }
  out << fmt::format("\n{:>8} {:>10.4f} {:>10.4f} {:>10.4f} {:>8}\n", "macro",
                     r.report.macro_precision, r.report.macro_recall, r.report.macro_f1,
                     r.confusion.total());
  out << fmt::format("accuracy {:.4f} ({} / {})\n", r.report.accuracy, r.confusion.trace(),
                     r.confusion.total());
  return out.str();
}

std::string format_report_json(const EvalReport& r) {
  nlohmann::ordered_json j;
  j["labels"] = r.labels;
  nlohmann::json matrix = nlohmann::json::array();
  for (std::size_t i = 0; i < r.labels.size(); ++i) {
    nlohmann::json row = nlohmann::json::array();
    for (std::size_t c = 0; c < r.labels.size(); ++c) row.push_back(r.confusion.at(i, c));
    matrix.push_back(row);
  }
  j["confusion"] = matrix;
  nlohmann::ordered_json classes = nlohmann::ordered_json::array();
  for (std::size_t i = 0; i < r.labels.size(); ++i) {
    const auto& m = r.report.per_class[i];
    classes.push_back({{"label", r.labels[i]},
                       {"precision", m.precision},
                       {"recall", m.recall},
                       {"f1", m.f1},
                       {"support", m.support},
                       {"tp", m.tp},
                       {"fp", m.fp},
                       {"fn", m.fn},
                       {"tn", m.tn},
                       {"degenerate", m.degenerate}});
  }
  j["classes"] = classes;
  j["accuracy"] = r.report.accuracy;
  j["macro_precision"] = r.report.macro_precision;
  j["macro_recall"] = r.report.macro_recall;
  j["macro_f1"] = r.report.macro_f1;
  j["total"] = r.confusion.total();
  return j.dump(2);
}

std::string format_report_csv(const EvalReport& r) {
  std::string out = "class,precision,recall,f1,support,tp,fp,fn,tn,degenerate\n";
  for (std::size_t i = 0; i < r.labels.size(); ++i) {
    const auto& m = r.report.per_class[i];
    out += fmt::format("{},{:.4f},{:.4f},{:.4f},{},{},{},{},{},{}\n", r.labels[i],
                       m.precision, m.recall, m.f1, m.support, m.tp, m.fp, m.fn, m.tn,
                       m.degenerate ? 1 : 0);
  }
  out += fmt::format("accuracy,{:.4f},,,{},,,,,\n", r.report.accuracy, r.confusion.total());
  return out;
}

std::string curves_csv(std::span<const EpochMetrics> metrics) {
  std::string out = "epoch,train_accuracy,train_loss,val_accuracy,val_loss\n";
  for (const auto& m : metrics) {
    out += fmt::format("{},{:.4f},{:.4f},{:.4f},{:.4f}\n", m.epoch, m.train_accuracy,
                       m.train_loss, m.val_accuracy, m.val_loss);
  }
  return out;
}

void export_curves(std::span<const EpochMetrics> metrics, const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::trunc);
  if (!out) throw IoError("cannot write " + path.string());
  out << curves_csv(metrics);
  if (!out) throw IoError("short write to " + path.string());
}

std::vector<EpochMetrics> read_curves_csv(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open " + path.string());
  std::string line;
  if (!std::getline(in, line) ||
      line != "epoch,train_accuracy,train_loss,val_accuracy,val_loss") {
    throw FormatError("unexpected curve CSV header in " + path.string());
  }
  std::vector<EpochMetrics> out;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    EpochMetrics m;
    char c1, c2, c3, c4;
    std::istringstream row(line);
    if (!(row >> m.epoch >> c1 >> m.train_accuracy >> c2 >> m.train_loss >> c3 >>
          m.val_accuracy >> c4 >> m.val_loss) ||
        c1 != ',' || c2 != ',' || c3 != ',' || c4 != ',') {
      throw FormatError("bad curve CSV row: " + line);
    }
    out.push_back(m);
  }
  return out;
}

}  // namespace bdcd
