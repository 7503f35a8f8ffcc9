"""Named initial vorticities."""

import numpy as np

from .errors import ConfigurationError
from .fields import Grid2D, ScalarField, irfft

PRESETS = ("zero", "gaussian", "dipole", "random_bandlimited", "shear_patch_smoothed", "hat")


def zero(grid):
    return ScalarField.zeros(grid)


def gaussian(grid, amplitude=1.0):
    return ScalarField(grid, amplitude * np.exp(-grid.radius**2))


def dipole(grid):
    """``d1 exp(-|x|^2)``, mean zero with dipole moment ``-pi`` along ``x1``."""
    X1, _ = grid.mesh
    return ScalarField(grid, -2.0 * X1 * np.exp(-grid.radius**2))


def hat(grid):
    """Lipschitz but not C^1: ``max(0, 1 - |x|)``."""
    return ScalarField(grid, np.maximum(0.0, 1.0 - grid.radius))


def shear_patch_smoothed(grid, a=1.5, b=0.75, width=0.15):
    """Elliptical patch with a tanh edge of thickness ``width``."""
    X1, X2 = grid.mesh
    rho = np.sqrt((X1 / a) ** 2 + (X2 / b) ** 2)
    return ScalarField(grid, 0.5 * (1.0 - np.tanh((rho - 1.0) / width)))


def random_bandlimited(grid, seed=0, kmax=4, windowed=True):
    """Random trigonometric polynomial with ``|m_i| <= kmax`` box modes, scaled to unit sup.

    With ``windowed`` the result is multiplied by ``exp(-(r / (L/8))^2)`` so
    that it is effectively supported in ``|x| <= L/2``; without it the field
    stays exactly band-limited.
    """
    if kmax < 1 or 2 * kmax + 1 > grid.n // 3:
        raise ConfigurationError(f"kmax must lie in [1, {(grid.n // 3 - 1) // 2}], got {kmax}")
    rng = np.random.default_rng(seed)
    n = grid.n
    coeffs = np.zeros((n, n // 2 + 1), dtype=complex)
    m = np.arange(-kmax, kmax + 1)
    re = rng.standard_normal((m.size, kmax + 1))
    im = rng.standard_normal((m.size, kmax + 1))
    coeffs[np.ix_(m % n, np.arange(kmax + 1))] = re + 1j * im
    coeffs[0, 0] = 0.0
    values = irfft(coeffs, n)
    if windowed:
        values = values * np.exp(-((grid.radius / (grid.L / 8)) ** 2))
    peak = np.abs(values).max()
    return ScalarField(grid, values / peak if peak > 0 else values)


def ensemble(grid, count=50, seed=0, kmax=4):
    """``count`` windowed random band-limited fields with consecutive seeds."""
    return [random_bandlimited(grid, seed=seed + k, kmax=kmax) for k in range(count)]


def make_preset(name, n=256, L=2 * np.pi, seed=0, kmax=4):
    grid = Grid2D(n, L)
    if name == "random_bandlimited":
        return random_bandlimited(grid, seed=seed, kmax=kmax)
    table = {"zero": zero, "gaussian": gaussian, "dipole": dipole, "hat": hat,
             "shear_patch_smoothed": shear_patch_smoothed}
    if name not in table:
        raise ConfigurationError(f"unknown preset {name!r}; choose from {', '.join(PRESETS)}")
    return table[name](grid)
