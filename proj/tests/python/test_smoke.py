# Copyright 2026 The doorfeel Authors
# SPDX-License-Identifier: Apache-2.0
import json

import pytest

import doorfeel


def test_constants_and_catalog():
    assert doorfeel.PROFILE_LENGTH == 630
    assert doorfeel.NUM_PAIRS == 10
    pairs = doorfeel.adjective_pairs()
    assert len(pairs) == 10
    assert pairs[9] == ("Heavy", "Light")
    assert doorfeel.likert_to_percent(1) == 0.0
    assert doorfeel.likert_to_percent(7) == 100.0


def test_synthetic_profile_and_ratings():
    specs = doorfeel.default_car_specs()
    assert [s["name"] for s in specs] == ["Genesis", "Grandeur", "K3", "K5", "Santafe", "Sorento"]
    spec = json.dumps(specs[0])
    p = doorfeel.synth_profile(spec, 1)
    assert len(p.values) == 630
    assert p.car_id == "Genesis"
    assert doorfeel.synth_profile(spec, 1).values == p.values
    r = doorfeel.synth_ratings(spec)
    assert all(0.0 <= v <= 100.0 for v in r.values)


def test_model_round_trip(tmp_path):
    config = json.loads(doorfeel.shrunken_config())
    config.update(epochs=3, input_length=630, conv_filters=[4, 4, 4, 4], lstm_units=[4, 4, 4])
    model = doorfeel.Model(json.dumps(config), 1)
    profile = doorfeel.NormalizedProfile("car", "t0", [float(i % 7) for i in range(630)])
    rating = doorfeel.RatingVector("car", [50.0] * 10)
    history = model.train([profile], [rating])
    assert len(history) == 3
    pred = model.predict(profile)
    assert len(pred) == 10
    path = tmp_path / "model.bin"
    model.save(path)
    assert doorfeel.Model.load(path).predict(profile) == pred


def test_reference_parameter_count():
    assert doorfeel.parameter_count(doorfeel.default_config()) == 2257898


def test_gradient_check():
    config = doorfeel.shrunken_config()
    assert doorfeel.gradient_check(config, 0)["passed"]
    assert not doorfeel.gradient_check(config, 0, corrupt=True)["passed"]


def test_folds_and_metrics():
    folds = dict(doorfeel.make_folds(["Genesis", "Grandeur", "K3", "K5", "Santafe", "Sorento"]))
    assert folds["K3"] == ["Genesis", "Grandeur", "K5", "Sorento"]
    a = doorfeel.RatingVector("x", [50, 60] + [30] * 8)
    b = doorfeel.RatingVector("x", [40, 70] + [30] * 8)
    errors, mean = doorfeel.mae(a, b)
    assert errors[:2] == [10.0, 10.0]
    assert mean == pytest.approx(2.0)
    assert doorfeel.band_analysis([25.0], [10.0]) == (0.0, 1.0)


def test_errors_are_typed():
    with pytest.raises(doorfeel.ValidationError):
        doorfeel.RatingVector("x", [1.0, 2.0])
    with pytest.raises(doorfeel.Error):
        doorfeel.load_profile("/nonexistent/profile.json")
