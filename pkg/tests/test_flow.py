import math

import numpy as np
import pytest

from cel_euler.errors import ConfigurationError, DomainError
from cel_euler.fields import Grid2D, ScalarField
from cel_euler.flow import (
    GridVelocitySampler, RigidRotation, ZeroVelocity, advance_flow, flow_gradient_bounds,
    sup_flow_gradient, transport_by_characteristics,
)
from cel_euler.presets import dipole

from conftest import gaussian

LABELS = Grid2D(16, 2 * math.pi)


def rotation(theta, p):
    c, s = math.cos(theta), math.sin(theta)
    return np.stack([c * p[..., 0] - s * p[..., 1], s * p[..., 0] + c * p[..., 1]], -1)


@pytest.fixture(scope="module")
def gauss_sampler():
    g = Grid2D(64, 2 * math.pi)
    return GridVelocitySampler.from_vorticity([0.0], [gaussian(g)], with_hessian=True)


def test_rigid_rotation_closed_form():
    flow = advance_flow(RigidRotation(), 0.0, math.pi / 4, 1e-3, with_second_gradient=True, grid=LABELS)
    want = rotation(math.pi / 4, flow.labels)
    assert np.abs(flow.positions - want).max() <= 1e-8
    c = math.cos(math.pi / 4)
    assert np.abs(flow.grad - np.array([[c, -c], [c, c]])).max() <= 1e-8
    assert np.abs(flow.jac - 1).max() <= 1e-12
    assert flow_gradient_bounds(flow) == pytest.approx((1.0, 0.0), abs=1e-10)


def test_backward_rotation_is_inverse():
    flow = advance_flow(RigidRotation(2.0), 1.0, 0.0, 1e-3, grid=LABELS)
    assert np.abs(flow.positions - rotation(-2.0, flow.labels)).max() <= 1e-8


def test_zero_velocity_is_identity():
    flow = advance_flow(ZeroVelocity(), 0.0, 1.0, 0.1, with_second_gradient=True, grid=LABELS)
    assert np.array_equal(flow.positions, flow.labels)
    assert sup_flow_gradient(flow) == 1.0


def test_gaussian_flow_jacobian_and_round_trip(gauss_sampler):
    fwd = advance_flow(gauss_sampler, 0.0, 1.0, 1e-3, grid=LABELS)
    assert np.abs(fwd.jac - 1).max() <= 1e-6
    back = advance_flow(gauss_sampler, 1.0, 0.0, 1e-3, labels=fwd.positions)
    assert np.abs(back.positions - fwd.labels).max() <= 1e-6
    # radial flow preserves |x|; the periodic images break the symmetry with growth in r
    r0 = np.hypot(*np.moveaxis(fwd.labels, -1, 0))
    r1 = np.hypot(*np.moveaxis(fwd.positions, -1, 0))
    assert np.abs(r1 - r0)[r0 <= 1.0].max() <= 1e-4


def _second_gradient_defect(n):
    """Max gap between variational gradients and centered differences of the lower order."""
    g = Grid2D(n, 2 * math.pi)
    sampler = GridVelocitySampler.from_vorticity([0.0], [gaussian(g)], with_hessian=True)
    h = 1e-4
    base = np.array([[[0.7, 0.3]]])
    flow = advance_flow(sampler, 0.0, 0.5, 1e-3, with_second_gradient=True, labels=base)
    worst = 0.0
    for a in range(2):
        e = np.zeros(2)
        e[a] = h
        plus = advance_flow(sampler, 0.0, 0.5, 1e-3, labels=base + e)
        minus = advance_flow(sampler, 0.0, 0.5, 1e-3, labels=base - e)
        fdx = (plus.positions - minus.positions) / (2 * h)
        worst = max(worst, np.abs(fdx[0, 0] - flow.grad[0, 0, :, a]).max())
        # grad2[..., k, a, b] = d_a d_b X_k
        fd = (plus.grad - minus.grad) / (2 * h)
        worst = max(worst, np.abs(fd[0, 0] - flow.grad2[0, 0, :, :, a]).max())
    return worst


def test_second_gradient_matches_differences():
    # the spline of grad u and the spline of its Hessian agree only up to interpolation error
    coarse, fine = _second_gradient_defect(64), _second_gradient_defect(128)
    assert fine <= 1e-5
    assert fine < coarse / 4


def test_continuation_matches_single_run(gauss_sampler):
    whole = advance_flow(gauss_sampler, 0.0, 0.6, 1e-2, with_second_gradient=True, grid=LABELS)
    first = advance_flow(gauss_sampler, 0.0, 0.3, 1e-2, with_second_gradient=True, grid=LABELS)
    second = advance_flow(gauss_sampler, 0.3, 0.6, 1e-2, with_second_gradient=True, start=first)
    assert second.t0 == 0.0 and second.t1 == 0.6
    assert np.abs(second.positions - whole.positions).max() <= 1e-12
    assert np.abs(second.grad2 - whole.grad2).max() <= 1e-10


def test_transport_of_steady_vortex():
    g = Grid2D(64, 2 * math.pi)
    w0 = gaussian(g)
    sampler = GridVelocitySampler.from_vorticity([0.0], [w0])
    inv = advance_flow(sampler, 1.0, 0.0, 1e-2, grid=g)
    w1 = transport_by_characteristics(w0, inv)
    assert np.abs(w1.values - w0.values).max() <= 1e-3


def test_transport_rejects_bad_flows():
    g = Grid2D(16, 2 * math.pi)
    w0 = ScalarField.zeros(g)
    fwd = advance_flow(ZeroVelocity(), 0.0, 1.0, 0.5, grid=g)
    with pytest.raises(ConfigurationError):
        transport_by_characteristics(w0, fwd)
    other = advance_flow(ZeroVelocity(), 1.0, 0.0, 0.5, grid=Grid2D(32, 1.0))
    with pytest.raises(ConfigurationError):
        transport_by_characteristics(w0, other)


def test_sampler_time_interpolation_and_range():
    g = Grid2D(32, 2 * math.pi)
    a, b = gaussian(g), dipole(g)
    s = GridVelocitySampler.from_vorticity([0.0, 1.0], [a, b])
    x = np.array([0.4, -0.2])
    y = np.array([0.1, 0.9])
    ua, _, _ = s(0.0, x, y)
    ub, _, _ = s(1.0, x, y)
    um, _, _ = s(0.25, x, y)
    assert np.allclose(um, 0.75 * ua + 0.25 * ub, atol=1e-14)
    with pytest.raises(DomainError):
        s(1.5, x, y)
    with pytest.raises(DomainError):
        advance_flow(s, 0.0, 2.0, 0.1)
    with pytest.raises(ConfigurationError):
        s(0.5, x, y, order=2)
    with pytest.raises(ConfigurationError):
        GridVelocitySampler([1.0, 0.0], [None, None])


def test_bad_step_and_missing_grid():
    with pytest.raises(DomainError):
        advance_flow(RigidRotation(), 0.0, 1.0, 0.0, grid=LABELS)
    with pytest.raises(ConfigurationError):
        advance_flow(RigidRotation(), 0.0, 1.0, 0.1)


def test_flow_csv(tmp_path):
    flow = advance_flow(RigidRotation(), 0.0, 0.1, 0.05, grid=LABELS)
    path = tmp_path / "flow.csv"
    flow.to_csv(path)
    lines = path.read_text().splitlines()
    assert lines[0] == "a1,a2,x1,x2,j11,j12,j21,j22,det"
    assert len(lines) == 1 + 16 * 16
    row = [float(v) for v in lines[1].split(",")]
    assert row[-1] == pytest.approx(1.0, abs=1e-8)
