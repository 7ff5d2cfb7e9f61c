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

#include <pybind11/functional.h>
#include <pybind11/numpy.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>
#include <pybind11/stl/filesystem.h>

#include <cstring>

#include "bdcd/dataset.hpp"
#include "bdcd/errors.hpp"
#include "bdcd/metrics.hpp"
#include "bdcd/model.hpp"
#include "bdcd/model_format.hpp"
#include "bdcd/train.hpp"

namespace py = pybind11;

namespace {

py::object json_to_python(const nlohmann::json& j) {
  return py::module_::import("json").attr("loads")(j.dump());
}

py::dict metrics_dict(const bdcd::EpochMetrics& m) {
  py::dict d;
  d["epoch"] = m.epoch;
  d["train_accuracy"] = m.train_accuracy;
  d["train_loss"] = m.train_loss;
  d["val_accuracy"] = m.val_accuracy;
  d["val_loss"] = m.val_loss;
  return d;
}

bdcd::Image image_from_array(
    const py::array_t<std::uint8_t, py::array::c_style | py::array::forcecast>& array) {
  if (array.ndim() != 3 || array.shape(2) != 3) {
    throw bdcd::InvalidShapeError("expected a uint8 array of shape (H, W, 3)");
  }
  bdcd::Image img(array.shape(0), array.shape(1));
  std::memcpy(img.pixels.data(), array.data(), img.pixels.size());
  return img;
}

bdcd::Prediction predict_any(const bdcd::ModelSpec& model, const py::object& image) {
  if (py::isinstance<py::bytes>(image)) {
    const std::string bytes = image.cast<std::string>();
    py::gil_scoped_release release;
    return bdcd::predict_bytes(
        model, {reinterpret_cast<const std::uint8_t*>(bytes.data()), bytes.size()});
  }
  if (py::isinstance<py::str>(image) ||
      py::isinstance(image, py::module_::import("os").attr("PathLike"))) {
    const auto path = image.cast<std::filesystem::path>();
    py::gil_scoped_release release;
    return bdcd::predict(model, bdcd::read_image(path));
  }
  const bdcd::Image img =
      image_from_array(image.cast<py::array_t<std::uint8_t, py::array::c_style |
                                                                py::array::forcecast>>());
  py::gil_scoped_release release;
  return bdcd::predict(model, img);
}

}  // namespace

PYBIND11_MODULE(_core, m) {
  m.doc() = "Banknote denomination classifier";

  auto error = py::register_exception<bdcd::Error>(m, "Error", PyExc_RuntimeError);
  py::register_exception<bdcd::InvalidShapeError>(m, "InvalidShapeError", error);
  py::register_exception<bdcd::InvalidParameterError>(m, "InvalidParameterError", error);
  py::register_exception<bdcd::NotFoundError>(m, "NotFoundError", error);
  py::register_exception<bdcd::EmptyDatasetError>(m, "EmptyDatasetError", error);
  py::register_exception<bdcd::IoError>(m, "IoError", error);
  py::register_exception<bdcd::DecodeError>(m, "DecodeError", error);
  py::register_exception<bdcd::FormatError>(m, "FormatError", error);
  py::register_exception<bdcd::VersionError>(m, "VersionError", error);
  py::register_exception<bdcd::CorruptionError>(m, "CorruptionError", error);

  m.attr("CLASS_LABELS") = bdcd::ClassVocabulary().names();

  py::class_<bdcd::Prediction>(m, "Prediction")
      .def_readonly("label", &bdcd::Prediction::label)
      .def_readonly("index", &bdcd::Prediction::index)
      .def_readonly("confidence", &bdcd::Prediction::confidence)
      .def_readonly("probabilities", &bdcd::Prediction::probabilities)
      .def(
          "top_k",
          [](const bdcd::Prediction& p, std::size_t k) {
            return p.top_k(bdcd::ClassVocabulary(), k);
          },
          py::arg("k") = 3)
      .def("__repr__", [](const bdcd::Prediction& p) {
        return "Prediction(label='" + p.label + "', confidence=" + std::to_string(p.confidence) +
               ")";
      });

  py::class_<bdcd::ModelSpec>(m, "Model")
      .def_static(
          "build",
          [](std::int64_t image_size, std::uint64_t seed) {
            return bdcd::build_model({}, image_size, seed);
          },
          py::arg("image_size") = 256, py::arg("seed") = 42)
      .def_static("load", &bdcd::load_model, py::arg("path"))
      .def_static("from_bytes",
                  [](const py::bytes& data) {
                    const std::string s = data;
                    return bdcd::deserialize_model(
                        {reinterpret_cast<const std::uint8_t*>(s.data()), s.size()});
                  })
      .def(
          "save", [](const bdcd::ModelSpec& self, const std::filesystem::path& path) {
            bdcd::save_model(self, path);
          },
          py::arg("path"))
      .def("to_bytes",
           [](const bdcd::ModelSpec& self) {
             const auto bytes = bdcd::serialize_model(self);
             return py::bytes(reinterpret_cast<const char*>(bytes.data()), bytes.size());
           })
      .def_property_readonly("parameter_count", &bdcd::ModelSpec::parameter_count)
      .def_property_readonly("image_size", &bdcd::ModelSpec::image_size)
      .def_property_readonly("input_shape", [](const bdcd::ModelSpec& self) { return self.input_shape; })
      .def_property_readonly("architecture", [](const bdcd::ModelSpec& self) { return self.architecture; })
      .def_property_readonly("labels", [](const bdcd::ModelSpec& self) { return self.vocab.names(); })
      .def("header", [](const bdcd::ModelSpec& self) { return json_to_python(bdcd::model_header(self)); })
      .def("predict", &predict_any, py::arg("image"),
           "Classify a file path, encoded PNG/JPEG bytes, or a uint8 (H, W, 3) RGB array.")
      .def("__eq__", [](const bdcd::ModelSpec& a, const bdcd::ModelSpec& b) { return a == b; });

  m.def(
      "synth",
      [](const std::filesystem::path& out, std::int64_t per_class, std::uint64_t seed,
         std::int64_t image_size) {
        py::gil_scoped_release release;
        return bdcd::synth_generate(out, per_class, seed, image_size);
      },
      py::arg("out"), py::arg("per_class"), py::arg("seed"), py::arg("image_size") = 256);

  m.def(
      "train",
      [](const std::filesystem::path& data, double val_split, std::int64_t epochs,
         std::int64_t batch_size, double lr, std::uint64_t seed, std::int64_t image_size,
         bool augment, std::optional<std::int64_t> early_stop_patience,
         const std::function<void(py::dict)>& on_epoch) {
        if (!(val_split > 0.0 && val_split < 1.0)) {
          throw bdcd::InvalidParameterError("val_split must be in (0, 1)");
        }
        bdcd::TrainConfig cfg;
        cfg.learning_rate = lr;
        cfg.batch_size = batch_size;
        cfg.epochs = epochs;
        cfg.seed = seed;
        cfg.image_size = image_size;
        cfg.early_stop_patience = early_stop_patience;
        if (augment) cfg.augment = bdcd::AugmentConfig{};
        cfg.validate();

        py::gil_scoped_release release;
        const bdcd::ClassVocabulary vocab;
        auto split = bdcd::split_dataset(bdcd::load_labeled_dataset(data, vocab, image_size),
                                         1.0 - val_split, seed);
        auto result = bdcd::train(bdcd::build_model(vocab, image_size, seed), split.train,
                                  split.val, cfg, [&](const bdcd::EpochMetrics& row) {
                                    if (!on_epoch) return;
                                    py::gil_scoped_acquire acquire;
                                    on_epoch(metrics_dict(row));
                                  });
        py::gil_scoped_acquire acquire;
        py::list rows;
        for (const auto& row : result.metrics) rows.append(metrics_dict(row));
        return py::make_tuple(std::move(result.model), rows);
      },
      py::arg("data"), py::arg("val_split") = 0.2, py::arg("epochs") = 16,
      py::arg("batch_size") = 32, py::arg("lr") = 1e-4, py::arg("seed") = 42,
      py::arg("image_size") = 256, py::arg("augment") = false,
      py::arg("early_stop_patience") = py::none(), py::arg("on_epoch") = py::none(),
      "Train the default network on a class-per-directory dataset. Returns (model, metrics).");

  m.def(
      "evaluate",
      [](const bdcd::ModelSpec& model, const std::filesystem::path& data) {
        bdcd::EvalReport report;
        {
          py::gil_scoped_release release;
          const auto items = bdcd::load_labeled_dataset(data, model.vocab, model.image_size());
          report = bdcd::evaluate(model, items);
        }
        return json_to_python(nlohmann::json::parse(bdcd::format_report_json(report)));
      },
      py::arg("model"), py::arg("data"));

  m.def(
      "model_info",
      [](const std::filesystem::path& path) { return json_to_python(bdcd::model_info(path).to_json()); },
      py::arg("path"));
}
