import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from cel_euler.errors import ConfigurationError
from cel_euler.fields import (
    Grid2D, ScalarField, integrate, read_field_csv, read_snapshot, sample, spectral_derivative,
    spectral_derivatives, write_field_csv, write_snapshot,
)
from cel_euler.presets import random_bandlimited

from conftest import gaussian, indicator_box


def test_grid_rejects_bad_sizes():
    for n in (8, 48, 100):
        with pytest.raises(ConfigurationError):
            Grid2D(n, 1.0)
    with pytest.raises(ConfigurationError):
        Grid2D(32, -1.0)


def test_grid_spacing_is_exact():
    g = Grid2D(64, 3.0)
    assert g.dx == 2 * 3.0 / 64
    assert g.x[0] == -3.0


def test_fields_are_immutable(grid64):
    f = ScalarField.zeros(grid64)
    with pytest.raises(AttributeError):
        f.values = np.ones((64, 64))
    with pytest.raises(ValueError):
        f.values[0, 0] = 1.0


def test_nonfinite_samples_rejected(grid64):
    v = np.zeros((64, 64))
    v[3, 3] = np.nan
    with pytest.raises(ConfigurationError):
        ScalarField(grid64, v)


def test_mixing_grids_rejected(grid64):
    other = Grid2D(64, 1.0)
    with pytest.raises(ConfigurationError):
        ScalarField.zeros(grid64) + ScalarField.zeros(other)


def test_derivative_of_constant_vanishes(grid64):
    f = ScalarField(grid64, np.full((64, 64), 5.0))
    for axis in (1, 2):
        for order in (1, 2):
            assert np.abs(spectral_derivative(f, axis, order).values).max() == 0.0


def test_derivative_of_sine_matches_closed_form():
    g = Grid2D(64, 2.0)
    X1, _ = g.mesh
    k = math.pi / g.L
    f = ScalarField(g, np.sin(k * X1))
    d = spectral_derivative(f, 1, 1)
    assert np.abs(d.values - k * np.cos(k * X1)).max() <= 1e-10
    d2 = spectral_derivative(f, 1, 2)
    assert np.abs(d2.values + k**2 * np.sin(k * X1)).max() <= 1e-10


def test_derivative_matches_centered_differences_at_second_order():
    errs = []
    for n in (64, 128):
        g = Grid2D(n, 2 * math.pi)
        f = random_bandlimited(g, seed=3, kmax=3, windowed=False)
        fd = (np.roll(f.values, -1, 0) - np.roll(f.values, 1, 0)) / (2 * g.dx)
        errs.append(np.abs(fd - spectral_derivative(f, 1).values).max())
    # halving dx divides an O(dx^2) error by four
    assert errs[0] / errs[1] == pytest.approx(4.0, rel=0.05)


def test_too_small_grid_refused():
    g = Grid2D(16, 1.0)
    f = ScalarField.zeros(g)
    spectral_derivative(f, 1)  # 16 is the minimum and is allowed


def test_mixed_derivatives_commute(grid64):
    f = random_bandlimited(grid64, seed=1, kmax=4)
    a = spectral_derivative(spectral_derivative(f, 1), 2).values
    b = spectral_derivative(spectral_derivative(f, 2), 1).values
    assert np.abs(a - b).max() <= 1e-10 * np.abs(a).max()
    c = spectral_derivatives(f, 2)[(1, 2)].values
    assert np.abs(a - c).max() <= 1e-10 * np.abs(a).max()


@settings(max_examples=20, deadline=None)
@given(seed=st.integers(0, 10_000), axis=st.sampled_from([1, 2]))
def test_integral_of_derivative_vanishes(seed, axis):
    g = Grid2D(32, 3.0)
    f = random_bandlimited(g, seed=seed, kmax=2, windowed=False)
    d = spectral_derivative(f, axis)
    assert abs(integrate(d)) <= 1e-10 * max(1.0, np.abs(f.values).sum() * g.dx**2)


def test_integrate_constant():
    g = Grid2D(32, 1.5)
    assert integrate(ScalarField(g, np.full((32, 32), 2.0))) == pytest.approx(2.0 * 3.0**2, rel=1e-14)


def test_gaussian_integral():
    g = Grid2D(256, 2 * math.pi)
    assert abs(integrate(gaussian(g)) - math.pi) <= 1e-10


def test_indicator_square_integral(grid64):
    f = indicator_box(grid64, 0.0, 1.0, 0.0, 1.0)
    assert abs(integrate(f) - 1.0) <= 4 * grid64.dx


def test_sample_exact_at_nodes(grid64):
    f = random_bandlimited(grid64, seed=7)
    X1, X2 = grid64.mesh
    idx = [(0, 0), (5, 17), (63, 63), (31, 2)]
    pts = [(X1[i, j], X2[i, j]) for i, j in idx]
    got = sample(f, pts)
    want = np.array([f.values[i, j] for i, j in idx])
    assert np.abs(got - want).max() <= 1e-13


def test_sample_fourth_order_at_midpoints():
    errs = []
    for n in (32, 64):
        g = Grid2D(n, 2.0)
        k = math.pi / g.L
        f = ScalarField(g, np.sin(k * g.mesh[0]))
        x = g.x[:-1] + g.dx / 2
        pts = np.column_stack([x, np.full_like(x, 0.3)])
        errs.append(np.abs(sample(f, pts) - np.sin(k * x)).max())
    assert errs[0] / errs[1] > 12.0


def test_sample_is_periodic(grid64):
    f = random_bandlimited(grid64, seed=2)
    p = np.array([[0.3, -1.1], [2.0, 2.5]])
    shift = 2 * grid64.L
    a = sample(f, p)
    b = sample(f, p + np.array([shift, -3 * shift]))
    assert np.abs(a - b).max() <= 1e-12


def test_snapshot_round_trip(tmp_path, grid64):
    f = random_bandlimited(grid64, seed=4)
    path = tmp_path / "f.cel"
    write_snapshot(path, f)
    raw = path.read_bytes()
    assert raw[:4] == b"CEL1"
    assert len(raw) == 16 + 8 * 64 * 64
    g = read_snapshot(path)
    assert g.grid == f.grid
    assert np.array_equal(g.values, f.values)


def test_snapshot_bad_magic(tmp_path):
    path = tmp_path / "bad.cel"
    path.write_bytes(b"XXXX" + bytes(12))
    with pytest.raises(ConfigurationError):
        read_snapshot(path)


def test_field_csv_round_trip(tmp_path):
    g = Grid2D(16, 1.0)
    f = random_bandlimited(g, seed=0, kmax=1)
    path = tmp_path / "f.csv"
    write_field_csv(path, f)
    text = path.read_text()
    assert text.startswith("x1,x2,value\n")
    assert "\r" not in text
    h = read_field_csv(path)
    assert np.array_equal(h.values, f.values)
