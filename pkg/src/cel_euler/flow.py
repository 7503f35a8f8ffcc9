"""Particle trajectories, inverse flows and transport along characteristics.

Labels are the grid nodes.  Positions are stored unwrapped (they may leave
the box); every field evaluation wraps periodically.
"""

import math
from dataclasses import dataclass, field

import numpy as np

from .biot_savart import velocity_spectral
from .errors import ConfigurationError, DomainError, InstabilityError
from .fields import ScalarField, sample_values, spline_coefficients

_HESS_KEYS = ((1, 1), (1, 2), (2, 2))


class RigidRotation:
    """``u = rate * x_perp``; its flow rotates the plane by ``rate * t``."""

    t_range = (-math.inf, math.inf)

    def __init__(self, rate=1.0):
        self.rate = float(rate)

    def __call__(self, t, x1, x2, order=1):
        w = self.rate
        u = np.stack([-w * x2, w * x1])
        if order == 0:
            return u, None, None
        du = np.zeros((2, 2) + x1.shape)
        du[0, 1] = -w
        du[1, 0] = w
        d2u = np.zeros((2, 2, 2) + x1.shape) if order >= 2 else None
        return u, du, d2u


class ZeroVelocity:
    t_range = (-math.inf, math.inf)

    def __call__(self, t, x1, x2, order=1):
        z = np.zeros((2,) + x1.shape)
        return z, np.zeros((2, 2) + x1.shape), np.zeros((2, 2, 2) + x1.shape) if order >= 2 else None


class GridVelocitySampler:
    """Velocity snapshots on a grid, cubic-spline in space and linear in time.

    A single snapshot is treated as a steady field valid for all times.
    """

    def __init__(self, times, velocities):
        if len(times) != len(velocities) or not len(times):
            raise ConfigurationError("need one velocity snapshot per time")
        self.times = np.asarray(times, dtype=float)
        if np.any(np.diff(self.times) <= 0):
            raise ConfigurationError("snapshot times must be strictly increasing")
        self.grid = velocities[0].grid
        self.t_range = (-math.inf, math.inf) if len(times) == 1 else (self.times[0], self.times[-1])
        self._coeffs = [self._prepare(v) for v in velocities]

    @classmethod
    def from_vorticity(cls, times, omegas, with_hessian=False):
        return cls(times, [velocity_spectral(w, with_hessian=with_hessian) for w in omegas])

    @staticmethod
    def _prepare(v):
        c = {"u": [spline_coefficients(v.u1.values), spline_coefficients(v.u2.values)]}
        c["du"] = [[spline_coefficients(v.grad[i][j].values) for j in range(2)] for i in range(2)]
        if v.hessian is not None:
            c["d2u"] = [{k: spline_coefficients(v.hessian[i][k].values) for k in _HESS_KEYS} for i in range(2)]
        return c

    def _eval(self, c, x1, x2, order):
        g = self.grid
        u = np.stack([sample_values(g, c["u"][i], x1, x2) for i in range(2)])
        if order == 0:
            return u, None, None
        du = np.stack([np.stack([sample_values(g, c["du"][i][j], x1, x2) for j in range(2)]) for i in range(2)])
        d2u = None
        if order >= 2:
            if "d2u" not in c:
                raise ConfigurationError("second gradients need snapshots built with with_hessian=True")
            d2u = np.empty((2, 2, 2) + x1.shape)
            for i in range(2):
                vals = {k: sample_values(g, c["d2u"][i][k], x1, x2) for k in _HESS_KEYS}
                d2u[i, 0, 0] = vals[(1, 1)]
                d2u[i, 0, 1] = d2u[i, 1, 0] = vals[(1, 2)]
                d2u[i, 1, 1] = vals[(2, 2)]
        return u, du, d2u

    def __call__(self, t, x1, x2, order=1):
        if len(self.times) == 1:
            return self._eval(self._coeffs[0], x1, x2, order)
        lo, hi = self.t_range
        tol = 1e-12 * max(1.0, abs(hi))
        if t < lo - tol or t > hi + tol:
            raise DomainError(f"time {t} outside sampler range [{lo}, {hi}]")
        k = int(np.clip(np.searchsorted(self.times, t, side="right") - 1, 0, len(self.times) - 2))
        s = (t - self.times[k]) / (self.times[k + 1] - self.times[k])
        if s <= 1e-14:
            return self._eval(self._coeffs[k], x1, x2, order)
        if s >= 1 - 1e-14:
            return self._eval(self._coeffs[k + 1], x1, x2, order)
        a = self._eval(self._coeffs[k], x1, x2, order)
        b = self._eval(self._coeffs[k + 1], x1, x2, order)
        return tuple(None if p is None else (1 - s) * p + s * q for p, q in zip(a, b))


@dataclass
class FlowMap:
    """``positions[i, j] = X(t1; t0, alpha_ij)`` with ``grad[..., k, a] = d_a X_k``."""

    grid: object
    t0: float
    t1: float
    positions: np.ndarray
    grad: np.ndarray
    grad2: np.ndarray = None
    jac: np.ndarray = None
    _labels: np.ndarray = field(default=None, repr=False)

    def __post_init__(self):
        if self.jac is None and self.grad is not None:
            g = self.grad
            self.jac = g[..., 0, 0] * g[..., 1, 1] - g[..., 0, 1] * g[..., 1, 0]

    @property
    def labels(self):
        if self._labels is not None:
            return self._labels
        X1, X2 = self.grid.mesh
        return np.stack([X1, X2], -1)

    def to_csv(self, path):
        a = self.labels.reshape(-1, 2)
        x = self.positions.reshape(-1, 2)
        j = self.grad.reshape(-1, 4)
        with open(path, "w", newline="\n") as fh:
            fh.write("a1,a2,x1,x2,j11,j12,j21,j22,det\n")
            for row in np.column_stack([a, x, j, self.jac.reshape(-1)]):
                fh.write(",".join(repr(float(v)) for v in row) + "\n")


def _rhs(velocity_at, t, X, F, S):
    u, du, d2u = velocity_at(t, X[0], X[1], order=2 if S is not None else 1)
    dX = u
    # d/dt F_ka = sum_l d_l u_k F_la
    dF = np.einsum("klm,lam->kam", du, F)
    dS = None
    if S is not None:
        dS = np.einsum("klpm,lam,pbm->kabm", d2u, F, F) + np.einsum("klm,labm->kabm", du, S)
    return dX, dF, dS


def advance_flow(velocity_at, t0, t1, dt, with_second_gradient=False, grid=None, labels=None, start=None):
    """Classical RK4 for ``dX/dt = u(t, X)`` plus the first (and optionally second) variational equations.

    ``t1 < t0`` integrates backward, which yields the inverse flow.  Labels
    default to the nodes of ``grid`` (or of ``velocity_at.grid``).  Passing a
    FlowMap as ``start`` continues it from its end time ``start.t1 == t0``,
    so the result maps the original labels from ``start.t0`` to ``t1``.
    """
    if dt <= 0:
        raise DomainError(f"dt must be positive, got {dt}")
    lo, hi = getattr(velocity_at, "t_range", (-math.inf, math.inf))
    for t in (t0, t1):
        if t < lo - 1e-12 * max(1, abs(lo)) or t > hi + 1e-12 * max(1, abs(hi)):
            raise DomainError(f"time {t} outside the velocity sampler range [{lo}, {hi}]")
    if start is not None:
        if abs(start.t1 - t0) > 1e-12 * max(1.0, abs(t0)):
            raise ConfigurationError(f"start flow ends at t={start.t1}, not at t0={t0}")
        if with_second_gradient and start.grad2 is None:
            raise ConfigurationError("start flow carries no second gradient")
        return _continue(velocity_at, start, t1, dt, with_second_gradient)
    grid = grid if grid is not None else getattr(velocity_at, "grid", None)
    if labels is None:
        if grid is None:
            raise ConfigurationError("need a grid or explicit labels")
        X1, X2 = grid.mesh
        labels = np.stack([X1, X2], -1)
    shape = labels.shape[:-1]
    m = int(np.prod(shape))
    X = labels.reshape(m, 2).T.astype(float).copy()
    F = np.zeros((2, 2, m))
    F[0, 0] = F[1, 1] = 1.0
    S = np.zeros((2, 2, 2, m)) if with_second_gradient else None
    X, F, S = _integrate(velocity_at, t0, t1, dt, X, F, S)
    return _pack(grid, t0, t1, shape, X, F, S, labels)


def _continue(velocity_at, start, t1, dt, with_second_gradient):
    shape = start.positions.shape[:-1]
    m = int(np.prod(shape))
    X = start.positions.reshape(m, 2).T.copy()
    F = np.moveaxis(start.grad.reshape(m, 2, 2), 0, -1).copy()
    S = np.moveaxis(start.grad2.reshape(m, 2, 2, 2), 0, -1).copy() if with_second_gradient else None
    X, F, S = _integrate(velocity_at, start.t1, t1, dt, X, F, S)
    return _pack(start.grid, start.t0, t1, shape, X, F, S, start._labels)


def _pack(grid, t0, t1, shape, X, F, S, labels):
    positions = X.T.reshape(shape + (2,))
    grad = np.moveaxis(F, -1, 0).reshape(shape + (2, 2))
    grad2 = None if S is None else np.moveaxis(S, -1, 0).reshape(shape + (2, 2, 2))
    return FlowMap(grid, float(t0), float(t1), positions, grad, grad2, _labels=labels)


def _integrate(velocity_at, t0, t1, dt, X, F, S):
    span = t1 - t0
    steps = max(1, int(math.ceil(abs(span) / dt - 1e-9)))
    h = span / steps
    t = t0
    for step in range(steps):
        k1 = _rhs(velocity_at, t, X, F, S)
        k2 = _rhs(velocity_at, t + h / 2, *_axpy((X, F, S), h / 2, k1))
        k3 = _rhs(velocity_at, t + h / 2, *_axpy((X, F, S), h / 2, k2))
        k4 = _rhs(velocity_at, t + h, *_axpy((X, F, S), h, k3))
        X, F, S = (
            None if y is None else y + (h / 6) * (a + 2 * b + 2 * c + d)
            for y, a, b, c, d in zip((X, F, S), k1, k2, k3, k4)
        )
        t = t0 + (step + 1) * h
        if not np.all(np.isfinite(X)):
            raise InstabilityError(f"non-finite positions at t={t:g}; reduce dt={dt:g}", t - h)
    return X, F, S


def _axpy(state, h, k):
    return tuple(None if y is None else y + h * d for y, d in zip(state, k))


def transport_by_characteristics(omega0, inverse_flow):
    """``omega(t, x) = omega0(X^{-t}(x))`` by spline interpolation at the mapped points."""
    if inverse_flow.grid != omega0.grid:
        raise ConfigurationError("inverse flow and omega0 live on different grids")
    if inverse_flow.t1 != 0.0:
        raise ConfigurationError(f"inverse flow must map back to time 0, maps to t={inverse_flow.t1}")
    p = inverse_flow.positions
    coeffs = spline_coefficients(omega0.values)
    return ScalarField(omega0.grid, sample_values(omega0.grid, coeffs, p[..., 0], p[..., 1]))


def flow_gradient_bounds(flow):
    """``(||grad X||_inf, ||grad^2 X||_{L^2})`` with the operator norm pointwise."""
    if flow.grad is None:
        raise ConfigurationError("flow map carries no gradient")
    sup_grad = float(np.linalg.norm(flow.grad, ord=2, axis=(-2, -1)).max())
    if flow.grad2 is None:
        raise ConfigurationError("flow map carries no second gradient")
    l2 = float(np.sqrt(np.sum(flow.grad2**2) * flow.grid.dx**2))
    return sup_grad, l2


def sup_flow_gradient(flow):
    if flow.grad is None:
        raise ConfigurationError("flow map carries no gradient")
    return float(np.linalg.norm(flow.grad, ord=2, axis=(-2, -1)).max())
