"""Velocity from vorticity: periodic spectral inversion and a free-space quadrature oracle.

Sign convention: ``u = (-d2 psi, d1 psi)`` with ``Laplace psi = omega``, so
``curl u = d1 u2 - d2 u1 = omega`` and positive vorticity turns
counter-clockwise, matching the kernel ``K(x) = x_perp / (2 pi |x|^2)``.
"""

from dataclasses import dataclass

import numpy as np
from scipy.signal import fftconvolve

from .errors import ConfigurationError
from .fields import ScalarField, VelocityField, irfft, rfft, spectral_derivatives

DIRECT_MAX_N = 128


def _stream_coefficients(omega):
    g = omega.grid
    K1, K2 = g.wavenumbers
    k2 = K1**2 + K2**2
    inv = np.zeros_like(k2)
    np.divide(1.0, k2, out=inv, where=k2 > 0)
    # psi_hat = -omega_hat / |k|^2; the k = 0 mode is dropped
    return -rfft(omega.values) * inv


def velocity_spectral(omega, with_hessian=False):
    """Torus Biot-Savart: velocity and gradient of the mean-free part of ``omega``.

    With ``with_hessian`` the result also carries ``hessian[i][(j, k)] = d_j d_k u_i``.
    """
    g = omega.grid
    n = g.n
    psi = _stream_coefficients(omega)
    K1o, K2o = g._odd_wavenumbers
    K1, K2 = g.wavenumbers
    # u1 = -d2 psi, u2 = d1 psi
    u1h = -1j * K2o * psi
    u2h = 1j * K1o * psi
    grad = (
        (ScalarField(g, irfft(K1o * K2o * psi, n)), ScalarField(g, irfft(K2**2 * psi, n))),
        (ScalarField(g, irfft(-(K1**2) * psi, n)), ScalarField(g, irfft(-K1o * K2o * psi, n))),
    )
    hessian = _velocity_hessian(g, psi) if with_hessian else None
    return VelocityField(ScalarField(g, irfft(u1h, n)), ScalarField(g, irfft(u2h, n)), grad, hessian)


def _velocity_hessian(g, psi):
    n = g.n
    K1o, K2o = g._odd_wavenumbers
    K1, K2 = g.wavenumbers
    # third derivatives of psi: d_a d_b d_c psi -> (i k_a)(i k_b)(i k_c) psi
    def d3(a, b, c):
        ks = {1: K1o, 2: K2o}
        return irfft((1j) ** 3 * ks[a] * ks[b] * ks[c] * psi, n)

    h1 = {(1, 1): -d3(2, 1, 1), (1, 2): -d3(2, 1, 2), (2, 2): -d3(2, 2, 2)}
    h2 = {(1, 1): d3(1, 1, 1), (1, 2): d3(1, 1, 2), (2, 2): d3(1, 2, 2)}
    return tuple({k: ScalarField(g, v) for k, v in h.items()} for h in (h1, h2))


def velocity_gradient(omega):
    """Spectral ``grad[i][j] = d_j u_i``."""
    return velocity_spectral(omega).grad


def _offset_kernel(grid, weight=None):
    n, dx = grid.n, grid.dx
    off = dx * np.arange(-(n - 1), n)
    O1, O2 = np.meshgrid(off, off, indexing="ij")
    r2 = O1**2 + O2**2
    r2[n - 1, n - 1] = 1.0
    K1 = -O2 / (2 * np.pi * r2)
    K2 = O1 / (2 * np.pi * r2)
    K1[n - 1, n - 1] = 0.0
    K2[n - 1, n - 1] = 0.0
    if weight is not None:
        w = weight(np.sqrt(r2))
        w[n - 1, n - 1] = weight(np.zeros(1))[0]
        K1 = K1 * w
        K2 = K2 * w
    return K1, K2


def _direct_sum(grid, values, K1, K2):
    n = grid.n
    s = slice(n - 1, 2 * n - 1)
    a = fftconvolve(values, K1, mode="full")[s, s] * grid.dx**2
    b = fftconvolve(values, K2, mode="full")[s, s] * grid.dx**2
    return a, b


def _direct_sum_brute(grid, values, K1, K2, rows=None):
    """Literal O(n^4) double loop over (target, source) pairs; kept as a cross-check."""
    n = grid.n
    rows = range(n) if rows is None else rows
    a = np.zeros((len(rows), n))
    b = np.zeros((len(rows), n))
    for r, i in enumerate(rows):
        for j in range(n):
            # source (p, q) sits at offset (i - p, j - q)
            k1 = K1[i : i + n, j : j + n][::-1, ::-1]
            k2 = K2[i : i + n, j : j + n][::-1, ::-1]
            a[r, j] = np.sum(k1 * values)
            b[r, j] = np.sum(k2 * values)
    return a * grid.dx**2, b * grid.dx**2


def _require_small(grid):
    if grid.n > DIRECT_MAX_N:
        raise ConfigurationError(f"direct quadrature is an oracle for n <= {DIRECT_MAX_N}, got n={grid.n}")


def _self_cell(grid, d1, d2):
    # K over the singular cell against the linear Taylor term of the density
    c = grid.dx**2 / (4 * np.pi)
    return c * d2, -c * d1


def velocity_direct(omega):
    """Free-space quadrature ``K * omega`` over the box (no periodic images).

    The singular cell drops the odd part of the kernel and keeps the exact
    cell integral of ``K`` against the linear Taylor term of ``omega``, which
    makes the rule fourth-order for smooth data.  Gradients are ``K * d_j omega``.
    """
    g = omega.grid
    _require_small(g)
    K1, K2 = _offset_kernel(g)
    return _direct_from_kernel(omega, K1, K2)


def _direct_from_kernel(omega, K1, K2, self_cell=True):
    g = omega.grid
    ders = spectral_derivatives(omega, 2)
    u1, u2 = _direct_sum(g, omega.values, K1, K2)
    if self_cell:
        c1, c2 = _self_cell(g, ders[(1,)].values, ders[(2,)].values)
        u1, u2 = u1 + c1, u2 + c2
    grad = [[None, None], [None, None]]
    second = {1: {1: ders[(1, 1)], 2: ders[(1, 2)]}, 2: {1: ders[(1, 2)], 2: ders[(2, 2)]}}
    for j in (1, 2):
        dj = ders[(j,)].values
        a, b = _direct_sum(g, dj, K1, K2)
        if self_cell:
            c1, c2 = _self_cell(g, second[j][1].values, second[j][2].values)
            a, b = a + c1, b + c2
        grad[0][j - 1] = ScalarField(g, a)
        grad[1][j - 1] = ScalarField(g, b)
    return VelocityField(ScalarField(g, u1), ScalarField(g, u2), (tuple(grad[0]), tuple(grad[1])))


@dataclass(frozen=True)
class KernelCutoff:
    """Radial cutoff: 1 on ``[0, inner]``, 0 beyond ``outer``, smooth monotone in between.

    The transition is the standard ``exp(-1/s)`` smooth step; its slope peaks
    at ``1.88 / (outer - inner)``, i.e. 3.76 for the default radii.
    """

    inner: float = 0.5
    outer: float = 1.0

    def __call__(self, r):
        r = np.asarray(r, dtype=float)
        s = np.clip((r - self.inner) / (self.outer - self.inner), 0.0, 1.0)
        a = _smooth_bump(1.0 - s)
        b = _smooth_bump(s)
        return a / (a + b)

    def slope_bound(self, samples=20001):
        r = np.linspace(self.inner, self.outer, samples)
        return float(np.max(np.abs(np.gradient(self(r), r))))


def _smooth_bump(s):
    out = np.zeros_like(s)
    pos = s > 0
    out[pos] = np.exp(-1.0 / s[pos])
    return out


def near_far_split(omega, cutoff=None):
    """Split the direct gradient ``K * d_j omega`` into near (``phi K``) and far (``(1-phi) K``) parts.

    Returns ``(near, far)``, each a 2x2 nested tuple of fields indexed like ``grad``.
    """
    cutoff = KernelCutoff() if cutoff is None else cutoff
    g = omega.grid
    _require_small(g)
    N1, N2 = _offset_kernel(g, cutoff)
    F1, F2 = _offset_kernel(g, lambda r: 1.0 - cutoff(r))
    # the singular correction belongs to the near part (phi = 1 there)
    near = _direct_from_kernel(omega, N1, N2, self_cell=True).grad
    far = _direct_from_kernel(omega, F1, F2, self_cell=False).grad
    return near, far


def grad_sup(grad):
    """Pointwise operator norm of a 2x2 nested gradient, maximised over the grid."""
    arr = np.stack(
        [np.stack([grad[0][0].values, grad[0][1].values], -1), np.stack([grad[1][0].values, grad[1][1].values], -1)],
        -2,
    )
    return float(np.linalg.norm(arr, ord=2, axis=(-2, -1)).max())
