import dataclasses
from pathlib import Path

import numpy as np
import pytest

from essint import (
    IntegratorConfig,
    ModelParseError,
    ModelValidationError,
    PiecewiseAffineFlow,
    dump_model,
    hopper_affine,
    integrate,
    load_model,
    order_test_affine,
    parse_model,
    save_model,
)

MODELS = Path(__file__).resolve().parent.parent / "models"

DRIFT = """
dim = 1
x0 = [-1.0]

[[events]]
row = [1.0]
offset = 0.0

[[pieces]]
signs = [-1]
A = [[0.0]]
b = [1.0]

[[pieces]]
signs = [1]
A = [[0.0]]
b = [2.0]
"""


def _same(a, b):
    assert np.array_equal(a.event_rows, b.event_rows)
    assert np.array_equal(a.event_offsets, b.event_offsets)
    assert a.pieces.keys() == b.pieces.keys()
    for key in a.pieces:
        assert np.array_equal(a.pieces[key].A, b.pieces[key].A)
        assert np.array_equal(a.pieces[key].b, b.pieces[key].b)


@pytest.mark.parametrize("make", [order_test_affine, hopper_affine])
def test_round_trip(make, tmp_path):
    sysm = make()
    path = tmp_path / "m.model"
    save_model(sysm, path)
    back = load_model(path)
    _same(sysm, back)
    assert dump_model(back) == path.read_text()


def test_round_trip_preserves_awkward_floats():
    sysm = dataclasses.replace(order_test_affine(), x0=np.array([0.1 + 0.2, -1e-300, 1 / 3]))
    back = parse_model(dump_model(sysm))
    assert np.array_equal(back.x0, sysm.x0)


def test_bundled_table1_file_is_the_order_test():
    model = load_model(MODELS / "table1.model")
    _same(model, order_test_affine())
    assert np.array_equal(model.x0, [-0.4, -0.15, 0.3])


def test_drift_file_reproduces_hand_crossing():
    model = parse_model(DRIFT)
    assert PiecewiseAffineFlow(model, model.x0)(2.0)[0] == pytest.approx(2.0, abs=1e-12)
    traj = integrate(model.as_hybrid(), model.x0, IntegratorConfig(0.01, tf=2.0))
    assert traj.final_state[0] == pytest.approx(2.0, abs=1e-12)


def test_missing_orthant_names_pattern():
    text = DRIFT.replace("signs = [1]", "signs = [-1]")
    with pytest.raises(ModelValidationError, match="duplicate"):
        parse_model(text)
    text = DRIFT.split("[[pieces]]")[0] + "[[pieces]]" + DRIFT.split("[[pieces]]")[1]
    with pytest.raises(ModelValidationError, match=r"\(1,\)"):
        parse_model(text)


@pytest.mark.parametrize("text,match", [
    ("dim = 1\n[[events]]\nrow = [1.0]\n", "pieces"),
    ("dim = [1]\nevents = []\npieces = []\n", "dim"),
    ("dim = 1\nevents = []\npieces = []\n", "events"),
    ("dim = 1 = 2", "m.model"),
    (DRIFT.replace('row = [1.0]', 'row = ["a"]'), "row"),
    (DRIFT.replace('signs = [1]', 'signs = [2]'), "signs"),
])
def test_parse_errors(text, match):
    with pytest.raises(ModelParseError, match=match):
        parse_model(text, "m.model")


@pytest.mark.parametrize("old,new,match", [
    ("b = [2.0]", "b = [2.0, 1.0]", "b"),
    ("A = [[0.0]]\nb = [2.0]", "A = [[0.0], [1.0]]\nb = [2.0]", "A"),
    ("x0 = [-1.0]", "x0 = [-1.0, 0.0]", "x0"),
])
def test_validation_errors(old, new, match):
    with pytest.raises(ModelValidationError, match=match):
        parse_model(DRIFT.replace(old, new))
