import json

import numpy as np
import pytest

from fingerkit.grid import (
    FieldError,
    GridSpec,
    ScalarField,
    field_from_function,
    load_fields,
    save_fields,
)


def test_spec_invariants():
    with pytest.raises(FieldError):
        GridSpec((2, 3, 3))
    with pytest.raises(FieldError):
        GridSpec((3, 3, 3), spacing=0.0)
    s = GridSpec((3, 4, 5), spacing=0.5, origin=(1, 2, 3))
    assert s.n_cells == 60


def test_value_at_layout():
    spec = GridSpec((3, 3, 3))
    f = ScalarField(spec, np.arange(27, dtype=float))
    assert f.value_at((1, 0, 0)) == 1.0
    assert f.value_at((0, 1, 0)) == 3.0
    assert f.value_at((0, 0, 1)) == 9.0
    with pytest.raises(FieldError):
        f.value_at((3, 0, 0))


def test_constant_field_value():
    spec = GridSpec((4, 4, 4))
    f = ScalarField(spec, np.ones(64))
    assert f.value_at((2, 3, 1)) == 1.0


def test_rejects_bad_values():
    spec = GridSpec((3, 3, 3))
    vals = np.ones(27)
    vals[5] = np.nan
    with pytest.raises(FieldError, match="index 5"):
        ScalarField(spec, vals)
    vals[5] = -1.0
    with pytest.raises(FieldError, match="negative"):
        ScalarField(spec, vals)
    with pytest.raises(FieldError, match="size mismatch"):
        ScalarField(spec, np.ones(26))


def test_height_axis_positions():
    spec = GridSpec((4, 4, 6), spacing=0.5, origin=(0, 0, 2.5))
    assert spec.height_of_layer(0) == 2.5
    assert spec.height_of_layer(5) == 0.0
    p = spec.position((1, 2, 3))
    assert np.allclose(p, [0.5, 1.0, 1.0])


def test_trilinear_cell_centers_and_midpoints():
    spec = GridSpec((4, 4, 4), origin=(0, 0, 3))
    vals = np.zeros(64)
    vals[spec.linear_index(1, 1, 1)] = 1.0
    f = ScalarField(spec, vals)
    assert f.trilinear_sample(spec.position((1, 1, 1))) == 1.0
    mid = 0.5 * (spec.position((1, 1, 1)) + spec.position((2, 1, 1)))
    assert f.trilinear_sample(mid) == pytest.approx(0.5)
    with pytest.raises(FieldError, match="outside"):
        f.trilinear_sample((-1.0, 0.0, 0.0))


def test_trilinear_reproduces_affine():
    spec = GridSpec((8, 8, 8), spacing=0.7, origin=(1.0, -2.0, 10.0))
    f = field_from_function(
        spec, lambda X, Y, Z: 50.0 + 2 * X + 3 * Y - Z, quantize=False
    )
    rng = np.random.default_rng(1)
    lo = spec.position((0, 0, 7))
    hi = spec.position((7, 7, 0))
    lo, hi = np.minimum(lo, hi), np.maximum(lo, hi)
    for _ in range(1000):
        p = rng.uniform(lo, hi)
        want = 50.0 + 2 * p[0] + 3 * p[1] - p[2]
        got = f.trilinear_sample(p)
        assert abs(got - want) <= 1e-12 * max(1.0, abs(want))


def test_roundtrip_bit_identical(tmp_path):
    spec = GridSpec((5, 4, 3), spacing=2.0, origin=(0, 0, 4))
    rng = np.random.default_rng(3)
    fields = [
        ScalarField(spec, rng.random(60).astype(np.float32).astype(np.float64), timestep=t)
        for t in range(2)
    ]
    save_fields(fields, tmp_path)
    loaded = load_fields(tmp_path / "manifest.json")
    assert len(loaded) == 2
    for a, b in zip(fields, loaded):
        assert np.array_equal(a.values, b.values)
    save_fields(loaded, tmp_path / "again")
    raw1 = (tmp_path / "t000.f32").read_bytes()
    raw2 = (tmp_path / "again" / "t000.f32").read_bytes()
    assert raw1 == raw2


def test_paper_scale_manifest_accepted(tmp_path):
    spec = GridSpec((90, 90, 100), origin=(0, 0, 99))
    f = ScalarField(spec, np.zeros(810000))
    save_fields([f], tmp_path)
    loaded = load_fields(tmp_path / "manifest.json")
    assert loaded[0].values.size == 810000


def test_payload_mismatch_reported(tmp_path):
    spec = GridSpec((3, 3, 3))
    save_fields([ScalarField(spec, np.zeros(27))], tmp_path)
    brick = tmp_path / "t000.f32"
    brick.write_bytes(brick.read_bytes()[:-4])  # one float short
    with pytest.raises(FieldError, match="payload size mismatch"):
        load_fields(tmp_path / "manifest.json")


def test_missing_manifest_and_brick(tmp_path):
    with pytest.raises(FieldError, match="manifest not found"):
        load_fields(tmp_path / "nope.json")
    spec = GridSpec((3, 3, 3))
    save_fields([ScalarField(spec, np.zeros(27))], tmp_path)
    (tmp_path / "t000.f32").unlink()
    with pytest.raises(FieldError, match="missing"):
        load_fields(tmp_path / "manifest.json")
