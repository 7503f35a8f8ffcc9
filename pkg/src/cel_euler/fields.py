"""Periodic grid functions on the truncated plane ``[-L, L)^2``.

Samples are stored as ``values[i1, i2]`` where ``i1`` indexes the ``x1``
coordinate and ``i2`` the ``x2`` coordinate (``indexing='ij'``), so a C-order
ravel runs over ``x2`` fastest.  Node ``i`` sits at ``-L + i*dx``.
"""

import os
import struct
from dataclasses import dataclass
from functools import cached_property

import numpy as np
from scipy import fft, ndimage

from .errors import ConfigurationError

SNAPSHOT_MAGIC = b"CEL1"
_HEADER = struct.Struct("<4sId")


def fft_workers():
    """Worker count for transforms, capped by ``CEL_THREADS`` (default 1)."""
    try:
        return max(1, int(os.environ.get("CEL_THREADS", "1")))
    except ValueError:
        return 1


@dataclass(frozen=True)
class Grid2D:
    n: int
    L: float

    def __post_init__(self):
        n = int(self.n)
        if n != self.n or n < 16 or n & (n - 1):
            raise ConfigurationError(f"n must be a power of two >= 16, got {self.n}")
        if not (np.isfinite(self.L) and self.L > 0):
            raise ConfigurationError(f"half width L must be positive, got {self.L}")
        object.__setattr__(self, "n", n)
        object.__setattr__(self, "L", float(self.L))

    @property
    def dx(self):
        return 2.0 * self.L / self.n

    @property
    def area(self):
        return (2.0 * self.L) ** 2

    @cached_property
    def x(self):
        return -self.L + self.dx * np.arange(self.n)

    @cached_property
    def mesh(self):
        X1, X2 = np.meshgrid(self.x, self.x, indexing="ij")
        X1.flags.writeable = False
        X2.flags.writeable = False
        return X1, X2

    @cached_property
    def radius(self):
        X1, X2 = self.mesh
        return np.hypot(X1, X2)

    @cached_property
    def wavenumbers(self):
        """Angular wavenumbers ``(k1, k2)`` broadcast to the rfft2 layout."""
        k1 = 2 * np.pi * fft.fftfreq(self.n, d=self.dx)
        k2 = 2 * np.pi * fft.rfftfreq(self.n, d=self.dx)
        K1, K2 = np.meshgrid(k1, k2, indexing="ij")
        return K1, K2

    @cached_property
    def _odd_wavenumbers(self):
        # Nyquist modes carry no odd derivative for real fields
        K1, K2 = self.wavenumbers
        nyq = np.pi / self.dx
        return np.where(np.abs(K1) == nyq, 0.0, K1), np.where(np.abs(K2) == nyq, 0.0, K2)

    @cached_property
    def dealias_mask(self):
        """2/3-rule mask: keep modes with |k_i| < (2/3) k_max on both axes."""
        K1, K2 = self.wavenumbers
        cut = (2.0 / 3.0) * (np.pi / self.dx)
        return (np.abs(K1) < cut) & (np.abs(K2) < cut)

    def fourier_derivative_factor(self, axis, order):
        K1, K2 = self._odd_wavenumbers if order % 2 else self.wavenumbers
        k = K1 if axis == 1 else K2
        return (1j * k) ** order


class ScalarField:
    """Real samples on a :class:`Grid2D`; immutable after construction."""

    __slots__ = ("grid", "values")

    def __init__(self, grid, values):
        values = np.array(values, dtype=float, copy=True)
        if values.shape != (grid.n, grid.n):
            raise ConfigurationError(f"values shape {values.shape} does not match grid n={grid.n}")
        if not np.all(np.isfinite(values)):
            raise ConfigurationError("field samples must be finite")
        values.flags.writeable = False
        object.__setattr__(self, "grid", grid)
        object.__setattr__(self, "values", values)

    def __setattr__(self, name, value):
        raise AttributeError("ScalarField is immutable")

    @classmethod
    def from_function(cls, grid, func):
        X1, X2 = grid.mesh
        return cls(grid, np.broadcast_to(func(X1, X2), (grid.n, grid.n)))

    @classmethod
    def zeros(cls, grid):
        return cls(grid, np.zeros((grid.n, grid.n)))

    def _other(self, other):
        if isinstance(other, ScalarField):
            if other.grid != self.grid:
                raise ConfigurationError("fields live on different grids")
            return other.values
        return other

    def __add__(self, other):
        return ScalarField(self.grid, self.values + self._other(other))

    __radd__ = __add__

    def __sub__(self, other):
        return ScalarField(self.grid, self.values - self._other(other))

    def __rsub__(self, other):
        return ScalarField(self.grid, self._other(other) - self.values)

    def __mul__(self, other):
        return ScalarField(self.grid, self.values * self._other(other))

    __rmul__ = __mul__

    def __neg__(self):
        return ScalarField(self.grid, -self.values)

    def __abs__(self):
        return ScalarField(self.grid, np.abs(self.values))

    def __repr__(self):
        return f"ScalarField(n={self.grid.n}, L={self.grid.L:g})"

    def mean(self):
        return float(self.values.mean())


@dataclass(frozen=True)
class VelocityField:
    """Velocity components and the gradient ``grad[i][j] = d_j u_i`` (0-based tuple indices).

    ``hessian``, when present, is a pair of dicts with ``hessian[i][(j, k)] = d_j d_k u_i``.
    """

    u1: ScalarField
    u2: ScalarField
    grad: tuple
    hessian: tuple = None

    @property
    def grid(self):
        return self.u1.grid

    def speed(self):
        return np.hypot(self.u1.values, self.u2.values)

    def gradient_array(self):
        """Gradient as an ``(n, n, 2, 2)`` array with ``[..., i, j] = d_j u_i``."""
        g = self.grad
        return np.stack(
            [np.stack([g[0][0].values, g[0][1].values], -1), np.stack([g[1][0].values, g[1][1].values], -1)],
            -2,
        )

    def gradient_sup(self):
        """Max over nodes of the pointwise operator (spectral) norm of the gradient."""
        return float(np.linalg.norm(self.gradient_array(), ord=2, axis=(-2, -1)).max())

    def divergence_sup(self):
        return float(np.abs(self.grad[0][0].values + self.grad[1][1].values).max())


def _check_grid(f):
    if f.grid.n < 16:
        raise ConfigurationError("grid too small for spectral differentiation")


def rfft(values):
    return fft.rfft2(values, workers=fft_workers())


def irfft(coeffs, n):
    return fft.irfft2(coeffs, s=(n, n), workers=fft_workers())


def spectral_derivative(f, axis, order=1):
    """Fourier-collocation derivative of ``f`` along ``axis`` (1 or 2)."""
    _check_grid(f)
    if axis not in (1, 2) or order not in (1, 2):
        raise ConfigurationError(f"unsupported derivative axis={axis} order={order}")
    factor = f.grid.fourier_derivative_factor(axis, order)
    return ScalarField(f.grid, irfft(rfft(f.values) * factor, f.grid.n))


def spectral_derivatives(f, max_order=2):
    """All multi-index derivatives up to ``max_order`` from a single forward transform.

    Returns a dict keyed by tuples such as ``(1,)``, ``(1, 2)``, ``(2, 2)``.
    """
    _check_grid(f)
    g = f.grid
    fh = rfft(f.values)
    K1o, K2o = g._odd_wavenumbers
    K1, K2 = g.wavenumbers
    out = {}
    if max_order >= 1:
        out[(1,)] = irfft(1j * K1o * fh, g.n)
        out[(2,)] = irfft(1j * K2o * fh, g.n)
    if max_order >= 2:
        out[(1, 1)] = irfft(-K1**2 * fh, g.n)
        out[(1, 2)] = irfft(-K1o * K2o * fh, g.n)
        out[(2, 2)] = irfft(-K2**2 * fh, g.n)
    return {k: ScalarField(g, v) for k, v in out.items()}


def integrate(f):
    """Rectangle rule ``dx^2 * sum``; spectrally accurate for periodic integrands."""
    return float(f.values.sum() * f.grid.dx**2)


def spline_coefficients(values):
    """Periodic cubic B-spline coefficients, reusable across many :func:`sample_values` calls."""
    return ndimage.spline_filter(np.asarray(values, dtype=float), order=3, mode="grid-wrap")


def sample_values(grid, coeffs, x1, x2):
    """Evaluate prefiltered spline ``coeffs`` at physical points (periodic wrap)."""
    x1 = np.asarray(x1, dtype=float)
    x2 = np.asarray(x2, dtype=float)
    idx = np.stack([(x1 + grid.L) / grid.dx, (x2 + grid.L) / grid.dx])
    return ndimage.map_coordinates(coeffs, idx, order=3, mode="grid-wrap", prefilter=False)


def sample(f, points):
    """Periodic cubic-spline interpolation of ``f`` at ``points`` (shape ``(m, 2)``).

    Exact at grid nodes, fourth-order accurate in between.
    """
    pts = np.asarray(points, dtype=float).reshape(-1, 2)
    return sample_values(f.grid, spline_coefficients(f.values), pts[:, 0], pts[:, 1])


def write_snapshot(path, f):
    with open(path, "wb") as fh:
        fh.write(_HEADER.pack(SNAPSHOT_MAGIC, f.grid.n, f.grid.L))
        fh.write(np.ascontiguousarray(f.values, dtype="<f8").tobytes())


def read_snapshot(path):
    with open(path, "rb") as fh:
        head = fh.read(_HEADER.size)
        if len(head) != _HEADER.size:
            raise ConfigurationError(f"{path}: truncated snapshot header")
        magic, n, L = _HEADER.unpack(head)
        if magic != SNAPSHOT_MAGIC:
            raise ConfigurationError(f"{path}: bad magic {magic!r}, expected {SNAPSHOT_MAGIC!r}")
        body = fh.read()
    if len(body) != 8 * n * n:
        raise ConfigurationError(f"{path}: expected {n * n} samples, found {len(body) // 8}")
    return ScalarField(Grid2D(n, L), np.frombuffer(body, dtype="<f8").reshape(n, n))


def write_field_csv(path, f):
    X1, X2 = f.grid.mesh
    with open(path, "w", newline="\n") as fh:
        fh.write("x1,x2,value\n")
        for a, b, v in zip(X1.ravel(), X2.ravel(), f.values.ravel()):
            fh.write(f"{float(a)!r},{float(b)!r},{float(v)!r}\n")


def read_field_csv(path):
    data = np.loadtxt(path, delimiter=",", skiprows=1, ndmin=2)
    n = int(round(np.sqrt(len(data))))
    if n * n != len(data):
        raise ConfigurationError(f"{path}: {len(data)} rows is not a square grid")
    x = data[:, 0].reshape(n, n)[:, 0]
    dx = x[1] - x[0]
    grid = Grid2D(n, n * dx / 2)
    return ScalarField(grid, data[:, 2].reshape(n, n))
