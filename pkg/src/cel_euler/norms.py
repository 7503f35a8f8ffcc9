"""Norms and moduli used by the estimates: W^{k,1}, Dini, translation, tails."""

from dataclasses import dataclass, field
from typing import NamedTuple

import numpy as np
from scipy import ndimage

from .errors import DomainError
from .fields import ScalarField, integrate, spectral_derivatives
from .rearrange import lorentz_norm

MULTI_INDICES = {0: [()], 1: [(1,), (2,)], 2: [(1, 1), (1, 2), (2, 2)]}
NORM_CSV_HEADER = "t,l1,l2,linf,w11,w21,mixed,dini,grad_lorentz21"


def _derivatives_upto(f, k):
    ders = {(): f}
    if k >= 1:
        ders.update(spectral_derivatives(f, max_order=k))
    return ders


def l1(f):
    return float(np.abs(f.values).sum() * f.grid.dx**2)


def lp_norm(f, p):
    if np.isinf(p):
        return float(np.abs(f.values).max())
    return float((np.sum(np.abs(f.values) ** p) * f.grid.dx**2) ** (1.0 / p))


def sobolev_norm(f, k):
    """``||f||_{L^1} + sum_{1<=|s|<=k} ||D^s f||_{L^1}`` over multi-indices ``s``."""
    if k not in (0, 1, 2):
        raise DomainError(f"unsupported Sobolev order k={k}")
    ders = _derivatives_upto(f, k)
    return sum(l1(ders[s]) for order in range(k + 1) for s in MULTI_INDICES[order])


class MixedSupResult(NamedTuple):
    sup: float
    mixed_l1: float
    ok: bool
    conclusive: bool


def sup_via_mixed_derivative(f):
    """Both sides of ``||f||_inf <= ||d1 d2 f||_{L^1}`` for effectively compact ``f``."""
    sup = lp_norm(f, np.inf)
    mixed = l1(spectral_derivatives(f, 2)[(1, 2)])
    total = l1(f)
    conclusive = total == 0.0 or tail_mass(f, f.grid.L / 2, 0) <= 1e-8 * total
    return MixedSupResult(sup, mixed, sup <= mixed + 1e-8, conclusive)


def _disk_min_filter(values, radius_cells):
    """Min over all grid offsets with ``|offset| <= radius_cells`` (periodic)."""
    m = int(np.floor(radius_cells + 1e-9))
    widths = {}
    out = None
    for a in range(-m, m + 1):
        w = int(np.floor(np.sqrt(max(radius_cells**2 - a * a, 0.0)) + 1e-9))
        if w not in widths:
            widths[w] = ndimage.minimum_filter1d(values, 2 * w + 1, axis=1, mode="wrap")
        row = np.roll(widths[w], -a, axis=0)
        out = row if out is None else np.minimum(out, row)
    return out


def modulus_of_continuity(f, r):
    """``sup_{|x-y|<=r} |f(x) - f(y)|`` over grid pairs (discrete disks)."""
    dx = f.grid.dx
    if r < dx * (1 - 1e-12) or r > 2 * f.grid.L * (1 + 1e-12):
        raise DomainError(f"r must lie in [dx, 2L] = [{dx:g}, {2 * f.grid.L:g}], got {r}")
    v = f.values
    return float(np.max(v - _disk_min_filter(v, r / dx)))


def dini_seminorm(f, nodes=48):
    """``int_0^1 modulus(r) dr / r``.

    Log-spaced trapezoid on ``[dx, 1]``; below one cell the modulus is taken
    linear in ``r``, which contributes exactly ``modulus(dx)``.
    """
    dx = f.grid.dx
    if np.ptp(f.values) == 0.0:
        return 0.0
    if dx >= 1.0:
        return modulus_of_continuity(f, dx) / dx
    nodes = max(int(nodes), 40)
    r = np.geomspace(dx, 1.0, nodes)
    m = np.array([modulus_of_continuity(f, ri) for ri in r])
    return float(m[0] + np.trapezoid(m, np.log(r)))


def translation_modulus(f, h):
    """``int |f(x+h) - f(x)| dx`` with a periodic shift."""
    h = np.asarray(h, dtype=float)
    cells = h / f.grid.dx
    whole = np.round(cells)
    if np.all(np.abs(cells - whole) <= 1e-9 * np.maximum(1.0, np.abs(cells))):
        shifted = np.roll(f.values, (-int(whole[0]), -int(whole[1])), axis=(0, 1))
    else:
        shifted = ndimage.shift(f.values, -cells, order=3, mode="grid-wrap")
    return float(np.abs(shifted - f.values).sum() * f.grid.dx**2)


def tail_mass(f, R, max_order=0):
    """``sum_{|a|<=max_order} int_{|x|>=R} |d^a f| dx``."""
    if R < 0 or R > f.grid.L:
        raise DomainError(f"R must lie in [0, L={f.grid.L:g}], got {R}")
    if max_order not in (0, 1, 2):
        raise DomainError(f"max_order must be 0, 1 or 2, got {max_order}")
    outside = f.grid.radius >= R
    ders = _derivatives_upto(f, max_order)
    total = 0.0
    for order in range(max_order + 1):
        for s in MULTI_INDICES[order]:
            total += np.abs(ders[s].values[outside]).sum()
    return float(total * f.grid.dx**2)


def gradient_magnitude(f):
    d = spectral_derivatives(f, 1)
    return ScalarField(f.grid, np.hypot(d[(1,)].values, d[(2,)].values))


def sobolev_lorentz_sides(f):
    """``(||f||_(2,1), || |grad f| ||_{L^1})``; their ratio estimates the embedding constant."""
    return lorentz_norm(f, 2, 1), l1(gradient_magnitude(f))


@dataclass
class NormReport:
    time: float
    lp: dict
    w11: float
    w21: float
    sup_mixed: float
    dini: float
    grad_lorentz21: float
    tail: list = field(default_factory=list)

    def csv_row(self):
        vals = [self.time, self.lp[1], self.lp[2], self.lp[np.inf], self.w11, self.w21,
                self.sup_mixed, self.dini, self.grad_lorentz21]
        return ",".join(repr(float(v)) for v in vals)


def norm_report(f, t=0.0, tail_radii=(), with_dini=True):
    ders = _derivatives_upto(f, 2)
    l1s = {s: l1(ders[s]) for order in range(3) for s in MULTI_INDICES[order]}
    w11 = l1s[()] + l1s[(1,)] + l1s[(2,)]
    w21 = w11 + l1s[(1, 1)] + l1s[(1, 2)] + l1s[(2, 2)]
    grad = ScalarField(f.grid, np.hypot(ders[(1,)].values, ders[(2,)].values))
    return NormReport(
        time=float(t),
        lp={1: l1s[()], 2: lp_norm(f, 2), np.inf: lp_norm(f, np.inf)},
        w11=w11,
        w21=w21,
        sup_mixed=l1s[(1, 2)],
        dini=dini_seminorm(f) if with_dini else float("nan"),
        grad_lorentz21=lorentz_norm(grad, 2, 1),
        tail=[(float(R), tail_mass(f, R, 2)) for R in tail_radii],
    )


def write_norm_csv(path, reports):
    with open(path, "w", newline="\n") as fh:
        fh.write(NORM_CSV_HEADER + "\n")
        for rep in reports:
            fh.write(rep.csv_row() + "\n")


def integral(f):
    return integrate(f)
