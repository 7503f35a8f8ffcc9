"""Time stepping for the vorticity equation and mollification of initial data.

Two methods share one driver:

* ``spectral``: classical RK4 on the Fourier coefficients, with the
  advection product dealiased by the 2/3 rule.
* ``semi_lagrangian``: the backward map ``A(t, x)`` is kept as a periodic
  displacement ``A - x``.  Each step backtracks from the nodes with a
  midpoint rule whose velocity is extrapolated linearly in time, composes
  with the previous map, and sets ``omega = omega0(A)``.  Vorticity is never
  re-interpolated from itself, so it only sees one interpolation of the data.
"""

import math
from dataclasses import dataclass, field

import numpy as np

from .biot_savart import velocity_spectral
from .errors import CFLError, ConfigurationError, DomainError, InstabilityError
from .fields import ScalarField, irfft, rfft, sample_values, spline_coefficients

METHODS = ("spectral", "semi_lagrangian")
DEFAULT_CHECKPOINTS = 21
CFL_LIMIT = 0.5


def _bump(s2):
    out = np.zeros_like(s2)
    inside = s2 < 1.0
    out[inside] = np.exp(-1.0 / (1.0 - s2[inside]))
    return out


@dataclass(frozen=True)
class Mollifier:
    """``rho_eps(x) = eps^-2 rho(x / eps)`` with ``rho`` the standard bump on the unit disk.

    The sampled kernel is renormalised so that its grid sum times ``dx^2`` is 1.
    """

    epsilon: float

    def kernel(self, grid):
        off = grid.dx * np.fft.fftfreq(grid.n, d=1.0 / grid.n)
        O1, O2 = np.meshgrid(off, off, indexing="ij")
        k = _bump((O1**2 + O2**2) / self.epsilon**2)
        total = k.sum()
        if total == 0.0:
            k[0, 0] = 1.0
            total = 1.0
        return k / (total * grid.dx**2)

    def __call__(self, f):
        return mollify(f, self.epsilon)


def mollify(f, epsilon):
    """Periodic discrete convolution ``rho_eps * f``."""
    g = f.grid
    if not (0.0 < epsilon <= g.L / 4):
        raise DomainError(f"epsilon must lie in (0, L/4] = (0, {g.L / 4:g}], got {epsilon}")
    k = Mollifier(float(epsilon)).kernel(g)
    out = irfft(rfft(f.values) * rfft(k) * g.dx**2, g.n)
    return ScalarField(g, out)


@dataclass
class Trajectory:
    """Checkpointed solution path.

    ``probe_times`` and ``probe_values`` hold per-step samples of
    ``int phi omega`` and ``int (d_t phi + u . grad phi) omega`` for each
    probe, shape ``(steps + 1, n_probes, 2)``.
    """

    omega0: ScalarField
    T: float
    dt: float
    method: str
    times: np.ndarray
    fields: list
    u_sup: np.ndarray
    grad_sup: np.ndarray
    mean: float
    config: object = None
    probes: tuple = ()
    probe_times: np.ndarray = None
    probe_values: np.ndarray = None
    _reports: dict = field(default_factory=dict, repr=False)

    @property
    def grid(self):
        return self.omega0.grid

    def norm_reports(self, with_dini=True):
        from .norms import norm_report

        key = bool(with_dini)
        if key not in self._reports:
            self._reports[key] = [norm_report(f, t, with_dini=with_dini) for t, f in zip(self.times, self.fields)]
        return self._reports[key]


def _velocity_sup(omega):
    v = velocity_spectral(omega)
    return float(v.speed().max()), v.gradient_sup()


def cfl_number(omega0, dt):
    umax, _ = _velocity_sup(omega0)
    return dt * umax / omega0.grid.dx, umax


def _checkpoint_steps(checkpoints, T, steps):
    if checkpoints is None:
        checkpoints = np.linspace(0.0, T, DEFAULT_CHECKPOINTS)
    cps = np.asarray(sorted(set(float(c) for c in checkpoints)), dtype=float)
    if cps.size and (cps[0] < -1e-12 or cps[-1] > T * (1 + 1e-12)):
        raise ConfigurationError(f"checkpoints must lie in [0, {T}]")
    idx = np.unique(np.concatenate([[0], np.rint(cps / T * steps).astype(int)]))
    return idx


class _Probe:
    """Caches a probe's spatial evaluation on a grid."""

    def __init__(self, fn, grid):
        self.fn = fn
        self.grid = grid

    def sample(self, t, omega_values, u1, u2):
        X1, X2 = self.grid.mesh
        phi, dphi_dt, d1, d2 = self.fn.evaluate(t, X1, X2)
        w = self.grid.dx**2
        a = float(np.sum(phi * omega_values) * w)
        b = float(np.sum((dphi_dt + u1 * d1 + u2 * d2) * omega_values) * w)
        return a, b


def simulate(omega0, T, dt, checkpoints=None, method="spectral", probes=(), config=None):
    """Evolve ``d_t omega + u . grad omega = 0`` from ``omega0`` up to time ``T``.

    ``probes`` are objects with ``evaluate(t, x1, x2) -> (phi, d_t phi, d1 phi, d2 phi)``;
    their pairings with the solution are recorded at every step.
    """
    if method not in METHODS:
        raise ConfigurationError(f"unknown method {method!r}; choose from {', '.join(METHODS)}")
    if not (T > 0 and math.isfinite(T)):
        raise ConfigurationError(f"T must be positive, got {T}")
    if not (dt > 0):
        raise ConfigurationError(f"dt must be positive, got {dt}")
    g = omega0.grid
    cfl, umax = cfl_number(omega0, dt)
    if cfl > CFL_LIMIT * (1 + 1e-12):
        suggested = CFL_LIMIT * g.dx / umax
        raise CFLError(
            f"dt={dt:g} gives CFL number {cfl:.3g} > {CFL_LIMIT}; use dt <= {suggested:.3g}", suggested
        )
    steps = max(1, int(math.ceil(T / dt - 1e-9)))
    h = T / steps
    save = set(int(i) for i in _checkpoint_steps(checkpoints, T, steps))
    probe_objs = [_Probe(p, g) for p in probes]
    stepper = _SpectralStepper(omega0, h) if method == "spectral" else _SemiLagrangianStepper(omega0, h)

    times, fields, usup, gsup = [], [], [], []
    ptimes = np.empty(steps + 1)
    pvals = np.empty((steps + 1, len(probe_objs), 2))
    last_good = 0.0
    for step in range(steps + 1):
        t = step * h
        values, u1, u2 = stepper.state()
        if not np.all(np.isfinite(values)):
            raise InstabilityError(f"non-finite vorticity at t={t:g}; last good time {last_good:g}", last_good)
        last_good = t
        if probe_objs:
            ptimes[step] = t
            for k, pr in enumerate(probe_objs):
                pvals[step, k] = pr.sample(t, values, u1, u2)
        if step in save:
            f = ScalarField(g, values)
            a, b = _velocity_sup(f)
            times.append(t)
            fields.append(f)
            usup.append(a)
            gsup.append(b)
        if step < steps:
            stepper.advance()

    return Trajectory(
        omega0=omega0, T=float(T), dt=float(h), method=method, times=np.array(times), fields=fields,
        u_sup=np.array(usup), grad_sup=np.array(gsup), mean=omega0.mean(), config=config,
        probes=tuple(probes),
        probe_times=ptimes if probe_objs else None,
        probe_values=pvals if probe_objs else None,
    )


class _SpectralStepper:
    def __init__(self, omega0, h):
        g = omega0.grid
        self.g = g
        self.h = h
        self.what = rfft(omega0.values)
        K1, K2 = g.wavenumbers
        self.K1o, self.K2o = g._odd_wavenumbers
        k2 = K1**2 + K2**2
        self.inv = np.zeros_like(k2)
        np.divide(1.0, k2, out=self.inv, where=k2 > 0)
        self.mask = g.dealias_mask
        self._cache = None

    def _velocity(self, what):
        n = self.g.n
        psi = -what * self.inv
        return irfft(-1j * self.K2o * psi, n), irfft(1j * self.K1o * psi, n)

    def _rhs(self, what, uv=None):
        n = self.g.n
        u1, u2 = self._velocity(what) if uv is None else uv
        w1 = irfft(1j * self.K1o * what, n)
        w2 = irfft(1j * self.K2o * what, n)
        return -rfft(u1 * w1 + u2 * w2) * self.mask

    def state(self):
        u1, u2 = self._velocity(self.what)
        self._cache = (u1, u2)
        return irfft(self.what, self.g.n), u1, u2

    def advance(self):
        h, w = self.h, self.what
        k1 = self._rhs(w, self._cache)
        k2 = self._rhs(w + 0.5 * h * k1)
        k3 = self._rhs(w + 0.5 * h * k2)
        k4 = self._rhs(w + h * k3)
        self.what = w + (h / 6.0) * (k1 + 2 * k2 + 2 * k3 + k4)
        self._cache = None


class _SemiLagrangianStepper:
    def __init__(self, omega0, h):
        g = omega0.grid
        self.g = g
        self.h = h
        self.c0 = spline_coefficients(omega0.values)
        X1, X2 = g.mesh
        self.X1, self.X2 = np.array(X1), np.array(X2)
        self.D1 = np.zeros_like(self.X1)
        self.D2 = np.zeros_like(self.X1)
        self.omega = np.array(omega0.values)
        self.prev_u = None
        self.u = None

    def state(self):
        v = velocity_spectral(ScalarField(self.g, self.omega))
        self.u = (v.u1.values, v.u2.values)
        return self.omega, self.u[0], self.u[1]

    def advance(self):
        g, h = self.g, self.h
        u1, u2 = self.u
        p1, p2 = self.prev_u if self.prev_u is not None else self.u
        # velocity at t_{n+1} and t_{n+1/2}, extrapolated from t_n and t_{n-1}
        e1, e2 = 2 * u1 - p1, 2 * u2 - p2
        m1, m2 = 1.5 * u1 - 0.5 * p1, 1.5 * u2 - 0.5 * p2
        y1 = self.X1 - 0.5 * h * e1
        y2 = self.X2 - 0.5 * h * e2
        c1, c2 = spline_coefficients(m1), spline_coefficients(m2)
        Y1 = self.X1 - h * sample_values(g, c1, y1, y2)
        Y2 = self.X2 - h * sample_values(g, c2, y1, y2)
        # A_{n+1}(x) = A_n(Y) = Y + D_n(Y)
        d1 = sample_values(g, spline_coefficients(self.D1), Y1, Y2)
        d2 = sample_values(g, spline_coefficients(self.D2), Y1, Y2)
        self.D1 = Y1 - self.X1 + d1
        self.D2 = Y2 - self.X2 + d2
        self.omega = sample_values(g, self.c0, self.X1 + self.D1, self.X2 + self.D2)
        self.prev_u = self.u


def cross_validate(omega0, T, dt):
    """``||omega_spectral(T) - omega_semi_lagrangian(T)||_1 / ||omega0||_1`` (0 for zero data)."""
    from .norms import l1

    total = l1(omega0)
    a = simulate(omega0, T, dt, checkpoints=[T], method="spectral")
    b = simulate(omega0, T, dt, checkpoints=[T], method="semi_lagrangian")
    if total == 0.0:
        return 0.0
    return l1(a.fields[-1] - b.fields[-1]) / total
