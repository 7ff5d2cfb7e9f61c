# Copyright 2026 The bdcd Authors
#
# Licensed under the Apache License, Version 2.0 (the "License");
# you may not use this file except in compliance with the License.
# You may obtain a copy of the License at
#
#      http://www.apache.org/licenses/LICENSE-2.0
#
# Unless required by applicable law or agreed to in writing, software
# distributed under the License is distributed on an "AS IS" BASIS,
# WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
# See the License for the specific language governing permissions and
# limitations under the License.

import io
import json

import numpy as np
import pytest

import bdcd


@pytest.fixture(scope="module")
def dataset(tmp_path_factory):
    root = tmp_path_factory.mktemp("synth")
    paths = bdcd.synth(root, per_class=3, seed=5, image_size=32)
    assert len(paths) == 30
    return root


def test_labels():
    assert bdcd.CLASS_LABELS == ["1", "2", "5", "10", "20", "50", "100", "200", "500", "1000"]


def test_build_and_predict_inputs(dataset):
    model = bdcd.Model.build(image_size=32, seed=1)
    assert model.input_shape == [32, 32, 3]
    assert model.labels == bdcd.CLASS_LABELS

    path = dataset / "100" / "100_00000.png"
    from_path = model.predict(str(path))
    from_pathlike = model.predict(path)
    from_bytes = model.predict(path.read_bytes())
    assert from_path.probabilities == from_pathlike.probabilities == from_bytes.probabilities
    assert abs(sum(from_path.probabilities) - 1.0) < 1e-4
    assert from_path.label == bdcd.CLASS_LABELS[int(np.argmax(from_path.probabilities))]
    assert from_path.top_k(2)[0][0] == from_path.label

    pixels = np.random.default_rng(0).integers(0, 256, size=(40, 24, 3), dtype=np.uint8)
    p = model.predict(pixels)
    assert len(p.probabilities) == 10


def test_bad_inputs():
    model = bdcd.Model.build(image_size=16, seed=1)
    with pytest.raises(bdcd.DecodeError):
        model.predict(b"\x89PNG not really")
    with pytest.raises(bdcd.InvalidShapeError):
        model.predict(np.zeros((4, 4), dtype=np.uint8))
    with pytest.raises(bdcd.InvalidParameterError):
        bdcd.Model.build(image_size=20)
    assert issubclass(bdcd.CorruptionError, bdcd.Error)


def test_save_load_round_trip(tmp_path):
    model = bdcd.Model.build(image_size=32, seed=7)
    path = tmp_path / "m.bdcm"
    model.save(path)
    back = bdcd.Model.load(path)
    assert back == model
    assert bdcd.Model.from_bytes(model.to_bytes()) == model

    info = bdcd.model_info(path)
    assert info["parameter_count"] == model.parameter_count
    assert info["header"]["class_labels"] == bdcd.CLASS_LABELS

    data = bytearray(path.read_bytes())
    data[len(data) // 2] ^= 0x10
    with pytest.raises(bdcd.CorruptionError):
        bdcd.Model.from_bytes(bytes(data))
    with pytest.raises(bdcd.NotFoundError):
        bdcd.Model.load(tmp_path / "missing.bdcm")


def test_train_and_evaluate(dataset):
    seen = []
    model, metrics = bdcd.train(dataset, val_split=0.34, epochs=2, batch_size=8,
                                image_size=32, seed=3, on_epoch=seen.append)
    assert [m["epoch"] for m in metrics] == [1, 2]
    assert seen == metrics
    assert set(metrics[0]) == {"epoch", "train_accuracy", "train_loss", "val_accuracy", "val_loss"}

    again, metrics_again = bdcd.train(dataset, val_split=0.34, epochs=2, batch_size=8,
                                      image_size=32, seed=3)
    assert metrics_again == metrics
    assert again == model

    report = bdcd.evaluate(model, dataset)
    assert report["total"] == 30
    assert sum(sum(row) for row in report["confusion"]) == 30
    json.dumps(report)
