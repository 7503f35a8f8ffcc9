"""Distribution functions, decreasing rearrangements and Lorentz norms.

Everything is computed from the sample multiset with weight ``dx**2`` per
sample, which is the exact rearrangement of the piecewise-constant
interpolant.  Integrals over the resulting step profile are done in closed
form step by step, so identities such as ``L^(p,p) = L^p`` hold to rounding.
"""

from dataclasses import dataclass

import numpy as np

from .errors import DomainError


@dataclass(frozen=True)
class RearrangementProfile:
    """Step function ``f*``: ``levels[k]`` on ``[k*weight, (k+1)*weight)``, zero afterwards."""

    levels: np.ndarray
    weight: float

    @property
    def total_measure(self):
        return self.weight * len(self.levels)

    @property
    def edges(self):
        return self.weight * np.arange(len(self.levels) + 1)

    def __call__(self, t):
        t = np.asarray(t, dtype=float)
        k = np.floor(t / self.weight).astype(int)
        inside = (t >= 0) & (k < len(self.levels))
        return np.where(inside, self.levels[np.clip(k, 0, len(self.levels) - 1)], 0.0)

    def lp_norm(self, p):
        if np.isinf(p):
            return float(self.levels[0]) if len(self.levels) else 0.0
        return float((self.weight * np.sum(self.levels**p)) ** (1.0 / p))

    def to_csv(self, path):
        """Write the step table ``t,fstar`` (left edge of each step)."""
        with open(path, "w", newline="\n") as fh:
            fh.write("t,fstar\n")
            for t, v in zip(self.edges[:-1], self.levels):
                fh.write(f"{float(t)!r},{float(v)!r}\n")


def distribution_function(f, alpha):
    """Measure of ``{|f| > alpha}``."""
    if alpha < 0:
        raise DomainError(f"alpha must be >= 0, got {alpha}")
    return float(np.count_nonzero(np.abs(f.values) > alpha) * f.grid.dx**2)


def decreasing_rearrangement(f):
    levels = np.sort(np.abs(f.values), axis=None)[::-1]
    return RearrangementProfile(np.ascontiguousarray(levels), f.grid.dx**2)


def _profile(f):
    return f if isinstance(f, RearrangementProfile) else decreasing_rearrangement(f)


def lorentz_norm(f, p, q):
    """Lorentz norm ``||f||_(p,q)`` of a field or profile.

    For ``q = inf`` this is ``sup_t t^(1/p) f*(t)``; the sup over each step is
    approached at its right edge.
    """
    if p < 1:
        raise DomainError(f"p must be >= 1, got {p}")
    if q < 1:
        raise DomainError(f"q must be >= 1 or inf, got {q}")
    prof = _profile(f)
    a = prof.levels
    if len(a) == 0 or a[0] == 0.0:
        return 0.0
    edges = prof.edges
    if np.isinf(q):
        return float(np.max(edges[1:] ** (1.0 / p) * a))
    # int_{t_k}^{t_{k+1}} t^{q/p - 1} dt = (p/q) (t_{k+1}^{q/p} - t_k^{q/p})
    s = q / p
    pw = edges**s
    return float(((p / q) * np.sum(a**q * np.diff(pw))) ** (1.0 / q))


def small_set_concentration(f, delta):
    """``int_0^delta f*(s) ds``, i.e. the largest mass of ``|f|`` on a set of measure ``delta``."""
    if delta < 0:
        raise DomainError(f"delta must be >= 0, got {delta}")
    prof = _profile(f)
    w = prof.weight
    full = min(int(np.floor(delta / w)), len(prof.levels))
    mass = w * prof.levels[:full].sum()
    if full < len(prof.levels):
        mass += (delta - full * w) * prof.levels[full]
    return float(mass)


def holder_lorentz_sides(f, g):
    """Both sides of ``int f g <= ||f||_(2,1) ||g||_(2,inf)``."""
    lhs = float(np.sum(f.values * g.values) * f.grid.dx**2)
    return lhs, lorentz_norm(f, 2, 1) * lorentz_norm(g, 2, np.inf)
