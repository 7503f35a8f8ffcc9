"""Machine-checkable inequality ledger over simulated trajectories.

Every check returns an :class:`InequalityCheck` with sampled left and right
sides.  Where an inequality carries an unspecified constant, the smallest
constant that makes it hold on the samples is fitted and reported; such
checks pass by construction and their deliverable is the constant.
"""

import math
from dataclasses import dataclass, field

import numpy as np
from scipy.integrate import cumulative_trapezoid
from scipy.optimize import brentq

from .biot_savart import velocity_spectral
from .errors import ConfigurationError, DomainError, PreconditionError
from .fields import Grid2D, spectral_derivatives
from .flow import GridVelocitySampler, advance_flow, flow_gradient_bounds
from .norms import (
    MULTI_INDICES, l1, lp_norm, norm_report, sobolev_lorentz_sides, tail_mass, translation_modulus,
)
from .rearrange import holder_lorentz_sides, small_set_concentration
from .solver import mollify, simulate

LEDGER_CSV_HEADER = "check,t,lhs,rhs,margin,fitted_C,pass"
SOBOLEV_LORENTZ_SHARP = 1.0 / math.sqrt(math.pi)
# statuses that report a non-applicable envelope rather than a violated one
NEUTRAL_STATUSES = ("premise-not-satisfied", "empty-range", "blow-up")


@dataclass
class InequalityCheck:
    name: str
    t: np.ndarray
    lhs: np.ndarray
    rhs: np.ndarray
    fitted_constant: float = 0.0
    margin: float = 0.0
    passed: bool = True
    status: str = "pass"
    notes: str = ""
    tolerance: float = 0.0
    statement: str = ""
    extras: dict = field(default_factory=dict)

    @property
    def failed(self):
        """A violated inequality, as opposed to an inapplicable one."""
        return not self.passed and self.status not in NEUTRAL_STATUSES

    def rows(self):
        fitted = self.fitted_constant
        for t, a, b in zip(self.t, self.lhs, self.rhs):
            m = b - a
            ok = self.passed if self.status == "fitted" else bool(m >= -self.tolerance)
            yield (self.name, float(t), float(a), float(b), float(m), float(fitted), ok)


def _finish(name, t, lhs, rhs, tolerance=0.0, fitted=0.0, statement="", notes="", status=None, extras=None):
    t, lhs, rhs = (np.atleast_1d(np.asarray(v, dtype=float)) for v in (t, lhs, rhs))
    margin = float(np.min(rhs - lhs)) if lhs.size else math.inf
    passed = margin >= -tolerance
    if status is None:
        status = "pass" if passed else "fail"
    return InequalityCheck(name, t, lhs, rhs, float(max(fitted, 0.0)), margin, bool(passed), status,
                           notes, tolerance, statement, extras or {})


def _fitted(name, t, lhs, rhs_unit, statement, notes="", extras=None):
    """Fitted-constant check: ``lhs <= C * rhs_unit`` with the smallest admissible ``C``."""
    lhs = np.asarray(lhs, dtype=float)
    rhs_unit = np.asarray(rhs_unit, dtype=float)
    pos = rhs_unit > 0
    if np.any((lhs > 0) & ~pos):
        c = math.inf
    else:
        c = float(np.max(lhs[pos] / rhs_unit[pos], initial=0.0)) if np.any(pos) else 0.0
        c = max(c, 0.0)
    chk = _finish(name, t, lhs, c * rhs_unit if math.isfinite(c) else np.full_like(lhs, math.inf),
                  fitted=c, statement=statement, notes=notes, status="fitted", extras=extras)
    chk.passed = math.isfinite(c)
    chk.status = "fitted" if chk.passed else "fail"
    return chk


# ---------------------------------------------------------------- envelopes

def _cumint(t, y):
    return cumulative_trapezoid(np.asarray(y, dtype=float), np.asarray(t, dtype=float), initial=0.0)


def gronwall_envelope(t, L, alpha, beta, tolerance=1e-9):
    """``L <= alpha + int beta L``  implies  ``L <= alpha exp(int beta)``.

    Integrals use the trapezoid rule on the common time grid.  If the premise
    fails on the samples the status is ``premise-not-satisfied``.
    """
    t, L, alpha, beta = (np.asarray(v, dtype=float) for v in (t, L, alpha, beta))
    if not (t.shape == L.shape == alpha.shape == beta.shape):
        raise ConfigurationError("all samples must share the time grid")
    scale = max(1.0, float(np.max(np.abs(alpha))))
    if np.any(np.diff(alpha) < -1e-12 * scale):
        raise PreconditionError("alpha must be nondecreasing")
    premise_slack = alpha + _cumint(t, beta * L) - L
    premise_ok = bool(np.all(premise_slack >= -tolerance * np.maximum(1.0, np.abs(L))))
    rhs = alpha * np.exp(_cumint(t, beta))
    chk = _finish("gronwall", t, L, rhs, tolerance, statement="L(t) <= alpha(t) exp(int_0^t beta)")
    chk.extras["premise_margin"] = float(np.min(premise_slack))
    if not premise_ok:
        chk.status = "premise-not-satisfied"
        chk.passed = False
        chk.notes = "integral premise fails on the samples"
    return chk


def _phi(x, m):
    return -np.log(x) if m == 1 else (x ** (1.0 - m) - 1.0) / (m - 1.0)


def osgood_envelope(t, rho, beta, gamma, mu_exponent=2.0, tolerance=1e-9):
    """``rho <= beta + int gamma mu(rho)`` with ``mu(r) = r^m`` bounds ``rho`` by ``phi^{-1}(phi(beta) - int gamma)``.

    For ``m = 2`` the bound is ``beta / (1 - beta int gamma)``; for ``m = 1``
    it is ``beta exp(int gamma)``.  When ``beta^(1-m) <= (m-1) int gamma``
    inside the horizon the bound is lost and the first such time is reported.
    """
    m = float(mu_exponent)
    if m < 1:
        raise DomainError(f"mu_exponent must be >= 1, got {mu_exponent}")
    if not beta > 0:
        raise DomainError(f"beta must be positive, got {beta}")
    t, rho, gamma = (np.asarray(v, dtype=float) for v in (t, rho, gamma))
    G = _cumint(t, gamma)
    statement = f"-phi(rho) + phi(beta) <= int gamma with mu(r) = r^{m:g}"
    if m == 1:
        return _finish("osgood", t, rho, beta * np.exp(G), tolerance, statement=statement)
    base = beta ** (1.0 - m) - (m - 1.0) * G
    ok = base > 0
    blow = None
    if not np.all(ok):
        k = int(np.argmin(ok))
        # base is linear in G between samples
        g_star = beta ** (1.0 - m) / (m - 1.0)
        t0, t1, g0, g1 = t[k - 1], t[k], G[k - 1], G[k]
        blow = float(t0 + (g_star - g0) / (g1 - g0) * (t1 - t0)) if k > 0 and g1 > g0 else float(t[k])
    rhs = base[ok] ** (-1.0 / (m - 1.0))
    chk = _finish("osgood", t[ok], rho[ok], rhs, tolerance, statement=statement)
    if blow is not None:
        chk.extras["blow_up_time"] = blow
        chk.notes = f"beta * int gamma reaches the blow-up threshold at t = {blow:.6g}"
        chk.status = "blow-up"
        chk.passed = False
    return chk


# ---------------------------------------------------------------- trajectory checks

def _w21(traj):
    return np.array([r.w21 for r in traj.norm_reports(with_dini=False)])


def check_criticality(traj):
    """Fits ``C`` in ``d/dt ||omega||_{W^{2,1}} <= C ||grad u||_inf ||omega||_{W^{2,1}}``.

    Centered differences at interior checkpoints only.
    """
    t = np.asarray(traj.times)
    if t.size < 5:
        raise ConfigurationError(f"need at least 5 checkpoints, got {t.size}")
    W = _w21(traj)
    G = np.asarray(traj.grad_sup)
    dW = (W[2:] - W[:-2]) / (t[2:] - t[:-2])
    unit = G[1:-1] * W[1:-1]
    return _fitted("criticality", t[1:-1], np.maximum(dW, 0.0), unit,
                   "d/dt ||omega||_W21 <= C ||grad u||_inf ||omega||_W21",
                   extras={"dW_dt": dW})


def check_lemma28(fields):
    """Fits ``C`` in ``||grad u||_inf <= C ||omega||_{W^{2,1}}``; zero fields are skipped."""
    fields = list(fields)
    if len(fields) < 10:
        raise ConfigurationError(f"need at least 10 fields, got {len(fields)}")
    lhs, unit, idx = [], [], []
    for k, f in enumerate(fields):
        w = norm_report(f, with_dini=False).w21
        if w == 0.0:
            continue
        lhs.append(velocity_spectral(f).gradient_sup())
        unit.append(w)
        idx.append(k)
    chk = _fitted("lemma28", idx, lhs, unit, "||grad u||_inf <= C ||omega||_W21",
                  notes=f"{len(fields) - len(idx)} zero fields skipped")
    return chk


def check_apriori_envelope(traj, C):
    """``||omega(t)||_{W^{2,1}} <= W0 / (1 - C t W0)`` for ``t < 1 / (C W0)``; also reports ``M``."""
    t = np.asarray(traj.times)
    W = _w21(traj)
    W0 = W[0]
    statement = "||omega(t)||_W21 <= W0 / (1 - C t W0)"
    if W0 == 0.0 and np.all(W == 0.0):
        return _finish("apriori_envelope", t, W, np.zeros_like(W), statement=statement,
                       extras={"M": 0.0, "C": C}, notes="zero data")
    if not C > 0:
        raise DomainError(f"C must be positive, got {C}")
    ok = C * t * W0 < 1.0
    denom = 1.0 - C * traj.T * W0
    M = W0 / denom if denom > 0 else math.inf
    if not np.any(ok):
        chk = _finish("apriori_envelope", [], [], [], statement=statement, status="empty-range")
        chk.passed = False
    else:
        chk = _finish("apriori_envelope", t[ok], W[ok], W0 / (1.0 - C * t[ok] * W0), statement=statement)
    chk.extras.update(M=M, C=C, admissible_until=1.0 / (C * W0))
    chk.notes = f"C = {C:.6g} taken from lemma28; M = {M:.6g}"
    return chk


def _dini_data(traj):
    rep = traj.norm_reports(with_dini=True)[0]
    return rep.lp[1] + rep.lp[np.inf] + rep.dini, rep.lp[np.inf]


def check_dini_velocity(traj):
    """Fits ``C`` in ``||grad u(t)||_inf <= C A exp(C ||omega0||_inf t)``, ``A = ||w0||_1 + ||w0||_inf + |w0|_Dini``."""
    t = np.asarray(traj.times)
    G = np.asarray(traj.grad_sup)
    A, s = _dini_data(traj)
    statement = "||grad u(t)||_inf <= C A exp(C ||omega0||_inf t)"
    if A == 0.0:
        return _finish("dini_velocity", t, G, np.zeros_like(G), statement=statement, status="fitted")
    cs = []
    for ti, gi in zip(t, G):
        if gi <= 0:
            cs.append(0.0)
            continue
        f = lambda c: c * A * math.exp(c * s * ti) - gi  # noqa: E731
        hi = gi / A
        while f(hi) < 0:
            hi *= 2
        cs.append(brentq(f, 0.0, hi, xtol=1e-14, rtol=1e-13) if hi > 0 else 0.0)
    C = float(max(cs))
    rhs = C * A * np.exp(C * s * t)
    chk = _finish("dini_velocity", t, G, rhs, fitted=C, statement=statement, status="fitted")
    chk.extras.update(A=A, per_time_C=np.array(cs))
    return chk


def check_double_exponential(traj, C=None):
    """``||omega(t)||_W21 <= W0 exp(A / ||w0||_inf * exp(C ||w0||_inf t))`` with ``C`` from the Dini fit."""
    if traj.T < 1.0:
        raise ConfigurationError(f"horizon T must be >= 1, got {traj.T}")
    t = np.asarray(traj.times)
    W = _w21(traj)
    A, s = _dini_data(traj)
    statement = "||omega(t)||_W21 <= W0 exp(A/||w0||_inf exp(C ||w0||_inf t))"
    if s == 0.0:
        return _finish("double_exponential", t, W, W, statement=statement, notes="zero data")
    if C is None:
        C = check_dini_velocity(traj).fitted_constant
    rhs = W[0] * np.exp(A / s * np.exp(C * s * t))
    chk = _finish("double_exponential", t, W, rhs, statement=statement, extras={"C": C})
    chk.notes = f"C = {C:.6g} taken from dini_velocity"
    return chk


def check_lp_conservation(traj, tolerance=1e-3):
    """Relative drift of the L^1, L^2 and L^inf norms along the trajectory."""
    rows_t, lhs = [], []
    ref = {p: lp_norm(traj.omega0, p) for p in (1, 2, np.inf)}
    for t, f in zip(traj.times, traj.fields):
        for p in (1, 2, np.inf):
            rows_t.append(t)
            lhs.append(0.0 if ref[p] == 0 else abs(lp_norm(f, p) / ref[p] - 1.0))
    return _finish("lp_conservation", rows_t, lhs, np.full(len(lhs), tolerance),
                   statement="| ||omega(t)||_p / ||omega0||_p - 1 | <= tol, p in {1, 2, inf}")


def check_velocity_sup(traj):
    """``||u||_inf <= ||omega||_1 + ||omega||_inf``."""
    rhs = [l1(f) + lp_norm(f, np.inf) for f in traj.fields]
    return _finish("velocity_sup", traj.times, traj.u_sup, rhs, tolerance=1e-12,
                   statement="||u||_inf <= ||omega||_1 + ||omega||_inf")


def check_lipschitz_time(traj):
    """Fits ``C`` in ``||omega(t) - omega(s)||_{W^{1,1}} <= C |t - s|`` over consecutive checkpoints."""
    from .norms import sobolev_norm

    t = np.asarray(traj.times)
    lhs = np.array([sobolev_norm(b - a, 1) for a, b in zip(traj.fields[:-1], traj.fields[1:])])
    dt = np.diff(t)
    chk = _fitted("lipschitz_time", t[1:], lhs, dt, "||omega(t) - omega(s)||_W11 <= C |t - s|")
    M = float(np.max(_w21(traj)))
    chk.extras["M"] = M
    chk.notes = f"C / M^2 = {chk.fitted_constant / M**2:.4g}" if M > 0 else "zero data"
    return chk


def check_sup_mixed(fields):
    """``||f||_inf <= ||d1 d2 f||_1`` on effectively compact fields."""
    lhs, rhs, idx = [], [], []
    for k, f in enumerate(fields):
        d = spectral_derivatives(f, 2)[(1, 2)]
        lhs.append(lp_norm(f, np.inf))
        rhs.append(l1(d))
        idx.append(k)
    return _finish("sup_mixed", idx, lhs, rhs, tolerance=1e-9, statement="||f||_inf <= ||d1 d2 f||_1")


def check_holder_lorentz(fields, partners):
    """``int f g <= ||f||_(2,1) ||g||_(2,inf)`` pairwise."""
    lhs, rhs = [], []
    for f, g in zip(fields, partners):
        a, b = holder_lorentz_sides(f, g)
        lhs.append(a)
        rhs.append(b)
    scale = max([1.0] + [abs(v) for v in rhs])
    return _finish("holder_lorentz", np.arange(len(lhs)), lhs, rhs, tolerance=1e-12 * scale,
                   statement="int f g <= ||f||_(2,1) ||g||_(2,inf)")


def check_sobolev_lorentz(fields):
    """Fits ``C`` in ``||f||_(2,1) <= C ||grad f||_1`` and compares it with the sharp ``1/sqrt(pi)``."""
    lhs, unit = zip(*(sobolev_lorentz_sides(f) for f in fields))
    chk = _fitted("sobolev_lorentz", np.arange(len(lhs)), lhs, unit, "||f||_(2,1) <= C ||grad f||_1")
    chk.extras["sharp_constant"] = SOBOLEV_LORENTZ_SHARP
    if chk.fitted_constant > SOBOLEV_LORENTZ_SHARP * (1 + 1e-9):
        chk.passed = False
        chk.status = "fail"
    chk.notes = f"fitted C = {chk.fitted_constant:.6g}, isoperimetric bound {SOBOLEV_LORENTZ_SHARP:.6g}"
    return chk


# ---------------------------------------------------------------- flow and compactness

def _velocity_series(traj, with_hessian=False):
    return [velocity_spectral(f, with_hessian=with_hessian) for f in traj.fields]


def _hessian_l2(v):
    total = 0.0
    for i in range(2):
        h = v.hessian[i]
        total += np.sum(h[(1, 1)].values ** 2) + 2 * np.sum(h[(1, 2)].values ** 2) + np.sum(h[(2, 2)].values ** 2)
    return float(np.sqrt(total * v.grid.dx**2))


def check_flow_gradient(traj, label_n=32, dt=None):
    """Forward flow audit: ``||grad X(t)||_inf <= exp(int ||grad u||_inf)`` and
    ``||grad^2 X(t)||_2 <= G^3 int ||grad^2 u||_2`` with ``G = exp(int ||grad u||_inf)``.

    Labels are the nodes of a coarser ``label_n`` grid on the same box.
    """
    vels = _velocity_series(traj, with_hessian=True)
    t = np.asarray(traj.times)
    sampler = GridVelocitySampler(t, vels) if len(t) > 1 else GridVelocitySampler([0.0], vels)
    labels = Grid2D(label_n, traj.grid.L)
    dt = traj.dt if dt is None else dt
    Gint = _cumint(t, traj.grad_sup)
    H2 = _cumint(t, [_hessian_l2(v) for v in vels])
    sup1, l2g = [1.0], [0.0]
    flow = None
    for a, b in zip(t[:-1], t[1:]):
        if flow is None:
            flow = advance_flow(sampler, a, b, dt, with_second_gradient=True, grid=labels)
        else:
            flow = advance_flow(sampler, a, b, dt, with_second_gradient=True, start=flow)
        s, q = flow_gradient_bounds(flow)
        sup1.append(s)
        l2g.append(q)
    G = np.exp(Gint)
    first = _finish("flow_gradient", t, sup1, G, tolerance=1e-9,
                    statement="||grad X(t)||_inf <= exp(int ||grad u||_inf)")
    second = _finish("flow_second_gradient", t, l2g, G**3 * H2, tolerance=1e-9,
                     statement="||grad^2 X(t)||_2 <= G^3 int ||grad^2 u||_2")
    if flow is not None:
        first.extras["max_jacobian_defect"] = float(np.max(np.abs(flow.jac - 1.0)))
    return [first, second]


def _tail_l2_grad(f, R):
    d = spectral_derivatives(f, 1)
    outside = f.grid.radius >= R
    return float(np.sum((d[(1,)].values ** 2 + d[(2,)].values ** 2)[outside]) * f.grid.dx**2)


def _tail_by_order(f, R):
    ders = spectral_derivatives(f, 2)
    ders[()] = f
    outside = f.grid.radius >= R
    out = []
    for order in range(3):
        out.append(sum(float(np.abs(ders[s].values[outside]).sum()) for s in MULTI_INDICES[order]) * f.grid.dx**2)
    return out


def check_compactness_diagnostics(traj, eps_list, radii=None, shifts=None, deltas=(0.01, 0.03, 0.1),
                                  growth_factor=10.0):
    """Tails, translation moduli and small-set concentration of the mollified family.

    Each ``epsilon`` gets its own simulation from ``mollify(omega0, epsilon)``
    with the trajectory's horizon, step and method.  Returns three checks:
    ``compactness_tails``, ``compactness_equicontinuity`` and
    ``compactness_equiintegrability`` (the last carries the (delta, sup over
    epsilon) table in ``extras['table']``).
    """
    g = traj.grid
    eps_list = [float(e) for e in eps_list]
    for e in eps_list:
        if not (4 * g.dx * (1 - 1e-12) <= e <= g.L / 4):
            raise DomainError(f"epsilon {e} outside [4 dx, L/4] = [{4 * g.dx:g}, {g.L / 4:g}]")
    radii = [g.L / 2, 3 * g.L / 4] if radii is None else list(radii)
    shifts = [(k * g.dx, 0.0) for k in (1, 4)] + [(2 * g.dx, 2 * g.dx)] if shifts is None else shifts
    t = np.asarray(traj.times)
    runs = [simulate(mollify(traj.omega0, e), traj.T, traj.dt, checkpoints=t, method=traj.method)
            for e in eps_list]
    M = max(max(r.w21 for r in run.norm_reports(with_dini=False)) for run in runs)

    tails_t, tails_l, tails_r = [], [], []
    cont_t, cont_l, cont_r = [], [], []
    conc = np.zeros((len(deltas), len(t)))
    for run in runs:
        w0 = run.fields[0]
        G = np.exp(_cumint(run.times, run.grad_sup))
        D = _cumint(run.times, run.u_sup)
        vels = _velocity_series(run, with_hessian=True)
        H = G**3 * _cumint(run.times, [_hessian_l2(v) for v in vels])
        for k, (tk, f) in enumerate(zip(run.times, run.fields)):
            for R in radii:
                R0 = max(R - D[k], 0.0)
                t0, t1, t2 = _tail_by_order(w0, R0)
                rhs = t0 + 2 * G[k] * t1 + 3 * math.sqrt(2) * G[k] ** 2 * t2 \
                    + math.sqrt(3) * H[k] * math.sqrt(_tail_l2_grad(w0, R0))
                tails_t.append(tk)
                tails_l.append(tail_mass(f, R, 2))
                tails_r.append(rhs)
            for h in shifts:
                cont_t.append(tk)
                cont_l.append(translation_modulus(f, h))
                cont_r.append(math.hypot(*h) * M)
            second = spectral_derivatives(f, 2)
            for j, d in enumerate(deltas):
                c = max(small_set_concentration(second[s], d) for s in MULTI_INDICES[2])
                conc[j, k] = max(conc[j, k], c)
    scale = max([1.0] + tails_r)
    tails = _finish("compactness_tails", tails_t, tails_l, tails_r, tolerance=1e-9 * scale,
                    statement="tail_R(omega_eps(t)) <= transported tail envelope at R - int ||u||_inf")
    cont = _finish("compactness_equicontinuity", cont_t, cont_l, cont_r, tolerance=1e-12,
                   statement="int |omega_eps(t, x+h) - omega_eps(t, x)| <= |h| M")
    cont.extras["M"] = M
    ct = np.repeat(t[None, :], len(deltas), 0).ravel()
    integ = _finish("compactness_equiintegrability", ct, conc.ravel(),
                    np.repeat(growth_factor * conc[:, :1], len(t), 1).ravel(),
                    statement=f"sup_eps concentration(delta, t) <= {growth_factor:g} x its t = 0 value")
    integ.extras["table"] = {"deltas": list(deltas), "times": t, "sup_over_eps": conc}
    return [tails, cont, integ]


# ---------------------------------------------------------------- weak form

def _smooth_bump(s):
    out = np.zeros_like(s)
    inside = s < 1.0
    out[inside] = np.exp(1.0 - 1.0 / (1.0 - s[inside] ** 2))
    return out


def _smooth_bump_deriv(s):
    out = np.zeros_like(s)
    inside = s < 1.0
    si = s[inside]
    q = 1.0 - si**2
    out[inside] = np.exp(1.0 - 1.0 / q) * (-2.0 * si / q**2)
    return out


@dataclass(frozen=True)
class BumpTestFunction:
    """``phi(t, x) = (1 + a sin(f t)) b(|x - c - v t| / r)`` with ``b`` a C^inf bump of unit height."""

    center: tuple = (0.0, 0.0)
    radius: float = 1.0
    drift: tuple = (0.0, 0.0)
    modulation: float = 0.0
    frequency: float = 1.0

    def evaluate(self, t, x1, x2):
        c1 = self.center[0] + self.drift[0] * t
        c2 = self.center[1] + self.drift[1] * t
        y1, y2 = x1 - c1, x2 - c2
        rr = np.hypot(y1, y2)
        s = rr / self.radius
        b = _smooth_bump(s)
        db = _smooth_bump_deriv(s) / self.radius
        safe = np.where(rr > 0, rr, 1.0)
        g1 = np.where(rr > 0, db * y1 / safe, 0.0)
        g2 = np.where(rr > 0, db * y2 / safe, 0.0)
        amp = 1.0 + self.modulation * math.sin(self.frequency * t)
        damp = self.modulation * self.frequency * math.cos(self.frequency * t)
        phi = amp * b
        dphi_dt = damp * b - amp * (g1 * self.drift[0] + g2 * self.drift[1])
        return phi, dphi_dt, amp * g1, amp * g2

    def support_within(self, grid, T):
        reach = self.radius + 1e-12
        for t in (0.0, T):
            c1 = self.center[0] + self.drift[0] * t
            c2 = self.center[1] + self.drift[1] * t
            if max(abs(c1), abs(c2)) + reach >= grid.L:
                return False
        return True

    def c1_norm(self, T):
        amp = 1.0 + abs(self.modulation)
        speed = math.hypot(*self.drift)
        grad = amp * float(np.max(np.abs(_smooth_bump_deriv(np.linspace(0, 1, 2001))))) / self.radius
        return amp + abs(self.modulation * self.frequency) + grad * speed + grad


@dataclass(frozen=True)
class ZeroTestFunction:
    def evaluate(self, t, x1, x2):
        z = np.zeros_like(x1)
        return z, z, z, z

    def support_within(self, grid, T):
        return True

    def c1_norm(self, T):
        return 0.0


def preset_test_functions():
    """Five compactly supported probes of different size, motion and time modulation."""
    return (
        BumpTestFunction((0.5, 0.0), 1.0),
        BumpTestFunction((-0.5, 0.2), 1.2, drift=(0.3, 0.0)),
        BumpTestFunction((0.0, 0.7), 0.8, modulation=0.5, frequency=2.0),
        BumpTestFunction((-0.3, -0.3), 1.5, drift=(0.1, -0.2), modulation=0.3, frequency=3.0),
        BumpTestFunction((1.0, 1.0), 1.2, drift=(-0.4, -0.4)),
    )


def check_weak_solution(traj, test_functions=None, relative_tolerance=1e-3):
    """Residual of ``int phi(T) w(T) - int phi(0) w0 = int_0^T int (d_t phi + u . grad phi) w``.

    Uses the per-step pairings recorded by the simulation when the test
    functions are its probes, and the checkpoints otherwise; time integrals
    are trapezoidal.  Tolerance is ``relative_tolerance * ||phi||_C1 * ||w0||_W11``.
    """
    from .norms import sobolev_norm

    probes = tuple(traj.probes) if test_functions is None else tuple(test_functions)
    g = traj.grid
    for p in probes:
        if not p.support_within(g, traj.T):
            raise ConfigurationError(f"test function {p} reaches the box boundary")
    if probes and probes == tuple(traj.probes) and traj.probe_values is not None:
        times, vals = traj.probe_times, traj.probe_values
    else:
        times = np.asarray(traj.times)
        vals = np.empty((len(times), len(probes), 2))
        X1, X2 = g.mesh
        for k, (tk, f) in enumerate(zip(times, traj.fields)):
            v = velocity_spectral(f)
            for j, p in enumerate(probes):
                phi, dphi, d1, d2 = p.evaluate(tk, X1, X2)
                vals[k, j, 0] = np.sum(phi * f.values) * g.dx**2
                vals[k, j, 1] = np.sum((dphi + v.u1.values * d1 + v.u2.values * d2) * f.values) * g.dx**2
    w11 = sobolev_norm(traj.omega0, 1)
    res, tol = [], []
    for j, p in enumerate(probes):
        boundary = vals[-1, j, 0] - vals[0, j, 0]
        bulk = float(np.trapezoid(vals[:, j, 1], times))
        res.append(abs(boundary - bulk))
        tol.append(relative_tolerance * p.c1_norm(traj.T) * w11)
    chk = _finish("weak_solution", np.arange(len(res)), res, tol,
                  statement="|weak-form residual| <= 1e-3 ||phi||_C1 ||omega0||_W11")
    chk.extras["residuals"] = np.array(res)
    chk.notes = f"{len(times)} time samples"
    return chk


# ---------------------------------------------------------------- ledger

def write_ledger_csv(path, checks):
    with open(path, "w", newline="\n") as fh:
        fh.write(LEDGER_CSV_HEADER + "\n")
        for chk in sorted(checks, key=lambda c: c.name):
            for row in chk.rows():
                name, t, a, b, m, c, ok = row
                fh.write(f"{name},{t!r},{a!r},{b!r},{m!r},{c!r},{'true' if ok else 'false'}\n")


def summary(checks):
    lines = []
    for chk in sorted(checks, key=lambda c: c.name):
        c = f" C={chk.fitted_constant:.6g}" if chk.status == "fitted" else ""
        lines.append(f"{chk.name:32s} {chk.status:22s} margin={chk.margin:.3e}{c}  [{chk.statement}]"
                     + (f"  ({chk.notes})" if chk.notes else ""))
    return "\n".join(lines)


TRAJECTORY_CHECKS = (
    "apriori_envelope", "compactness", "criticality", "dini_velocity", "double_exponential",
    "flow_gradient", "lemma28", "lipschitz_time", "lp_conservation", "velocity_sup", "weak_solution",
)
ENSEMBLE_CHECKS = ("holder_lorentz", "sobolev_lorentz", "sup_mixed")
CHECK_NAMES = tuple(sorted(TRAJECTORY_CHECKS + ENSEMBLE_CHECKS))
DEFAULT_CHECKS = tuple(n for n in CHECK_NAMES if n not in ("compactness", "flow_gradient"))


def evaluate(names, traj=None, ensemble=(), eps_list=()):
    """Run the named checks and return them sorted by name.

    ``lemma28`` fits over the trajectory fields together with the ensemble,
    and ``apriori_envelope`` uses that constant.  Compactness requires
    ``eps_list``.
    """
    names = list(dict.fromkeys(names))
    unknown = [n for n in names if n not in CHECK_NAMES]
    if unknown:
        raise ConfigurationError(f"unknown checks {', '.join(unknown)}; valid: {', '.join(CHECK_NAMES)}")
    if traj is None and any(n in TRAJECTORY_CHECKS for n in names):
        raise ConfigurationError("trajectory checks need a trajectory")
    ensemble = list(ensemble)
    out = []
    lemma = None
    if "lemma28" in names or "apriori_envelope" in names:
        lemma = check_lemma28(list(traj.fields) + ensemble)
        if "lemma28" in names:
            out.append(lemma)
    single = {
        "criticality": check_criticality, "dini_velocity": check_dini_velocity,
        "double_exponential": check_double_exponential, "lipschitz_time": check_lipschitz_time,
        "lp_conservation": check_lp_conservation, "velocity_sup": check_velocity_sup,
        "weak_solution": check_weak_solution,
    }
    for name in names:
        if name in single:
            out.append(single[name](traj))
        elif name == "apriori_envelope":
            out.append(check_apriori_envelope(traj, lemma.fitted_constant))
        elif name == "flow_gradient":
            out.extend(check_flow_gradient(traj))
        elif name == "compactness":
            if not eps_list:
                raise ConfigurationError("compactness needs a non-empty eps_list")
            out.extend(check_compactness_diagnostics(traj, eps_list))
        elif name == "holder_lorentz":
            out.append(check_holder_lorentz(ensemble, ensemble[1:] + ensemble[:1]))
        elif name == "sobolev_lorentz":
            out.append(check_sobolev_lorentz(ensemble))
        elif name == "sup_mixed":
            out.append(check_sup_mixed(ensemble))
    return sorted(out, key=lambda c: c.name)
