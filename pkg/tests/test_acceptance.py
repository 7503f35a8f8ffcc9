"""Desk-scale acceptance suite.

Each test records clause outcomes through the ``criterion`` fixture; the
terminal summary prints one PASS/FAIL line per criterion.  Clauses that are
not attainable with this discretization are strict xfails: they print FAIL
with the measured numbers, and the suite turns red if they ever start passing.
"""

import math
import time

import numpy as np
import pytest

from cel_euler import estimates as est
from cel_euler.biot_savart import velocity_direct
from cel_euler.cli import dipole_l2_error
from cel_euler.fields import Grid2D, ScalarField, spectral_derivative
from cel_euler.flow import GridVelocitySampler, RigidRotation, advance_flow
from cel_euler.norms import lp_norm, sobolev_norm
from cel_euler.presets import dipole, ensemble
from cel_euler.rearrange import decreasing_rearrangement, lorentz_norm
from cel_euler.solver import mollify, simulate

from conftest import field_suite, gaussian

TWO_PI = 2 * math.pi

pytestmark = pytest.mark.slow


@pytest.fixture(scope="module")
def dipole_runs():
    """Dipole at n = 256, T = 1 with the five preset probes, at dt and dt / 2."""
    g = Grid2D(256, TWO_PI)
    out = {}
    for dt in (1e-3, 5e-4):
        start = time.perf_counter()
        out[dt] = simulate(dipole(g), 1.0, dt, probes=est.preset_test_functions())
        out[dt].elapsed = time.perf_counter() - start
    return out


# ---------------------------------------------------------------- 1

def test_c1_direct_matches_radial_formula(criterion):
    c = criterion(1, "Biot-Savart oracle")
    start = time.perf_counter()
    g = Grid2D(128, TWO_PI)
    v = velocity_direct(gaussian(g))
    r = np.where(g.radius > 0, g.radius, 1.0)
    prof = np.where(g.radius > 0, -np.expm1(-(r**2)) / (2 * r**2), 0.5)
    X1, X2 = g.mesh
    inner = g.radius <= 2.0
    err = max(np.abs(v.u1.values + X2 * prof)[inner].max(), np.abs(v.u2.values - X1 * prof)[inner].max())
    rel = err / np.hypot(X1 * prof, X2 * prof)[inner].max()
    elapsed = time.perf_counter() - start
    assert c.clause("direct vs radial formula, |x| <= 2", rel <= 1e-3, f"rel Linf {rel:.3e} <= 1e-3")
    assert c.clause("runtime", elapsed <= 120, f"{elapsed:.1f} s <= 120 s")


@pytest.mark.xfail(strict=True, reason="whole-box dipole error is dominated by the torus gauge offset")
def test_c1_spectral_matches_direct_on_dipole(criterion):
    c = criterion(1, "Biot-Savart oracle")
    errs = [dipole_l2_error(dipole(Grid2D(128, L))) for L in (TWO_PI, 2 * TWO_PI)]
    c.clause("dipole error decreases as L doubles", errs[1] < errs[0], f"{errs[0]:.4f} -> {errs[1]:.4f}")
    ok = c.clause("dipole spectral vs direct, L = 2 pi", errs[0] <= 1e-2, f"rel L2 {errs[0]:.4f} <= 1e-2")
    assert ok


# ---------------------------------------------------------------- 2

@pytest.fixture(scope="module")
def gaussian_run():
    start = time.perf_counter()
    traj = simulate(gaussian(Grid2D(256, TWO_PI)), 1.0, 1e-3)
    traj.elapsed = time.perf_counter() - start
    return traj


def test_c2_lp_conservation(criterion, gaussian_run):
    c = criterion(2, "steady radial solution")
    chk = est.check_lp_conservation(gaussian_run, tolerance=1e-3)
    worst = float(np.max(chk.lhs))
    assert c.clause("Lp conservation p in {1, 2, inf}", chk.passed, f"max rel drift {worst:.2e} <= 1e-3")
    assert c.clause("runtime", gaussian_run.elapsed <= 300, f"{gaussian_run.elapsed:.1f} s <= 300 s")


@pytest.mark.xfail(strict=True, reason="periodic images make the torus Gaussian non-steady at the 1e-4 level")
def test_c2_radial_data_is_steady(criterion, gaussian_run):
    c = criterion(2, "steady radial solution")
    w0, w1 = gaussian_run.fields[0], gaussian_run.fields[-1]
    drift = float(np.abs(w1.values - w0.values).sum() / np.abs(w0.values).sum())
    assert c.clause("L1 drift of omega(1)", drift <= 1e-6, f"{drift:.3e} <= 1e-6")


# ---------------------------------------------------------------- 3

def test_c3_rearrangement_exactness(criterion):
    c = criterion(3, "rearrangement exactness")
    worst_lp, worst_l22 = 0.0, 0.0
    for f in field_suite(Grid2D(128, TWO_PI), 20):
        prof = decreasing_rearrangement(f)
        for p in (1, 2, 4, np.inf):
            ref = lp_norm(f, p)
            worst_lp = max(worst_lp, abs(prof.lp_norm(p) - ref) / ref)
        ref = lp_norm(f, 2)
        worst_l22 = max(worst_l22, abs(lorentz_norm(f, 2, 2) - ref) / ref)
    assert c.clause("||f*||_p = ||f||_p, 20 fields", worst_lp <= 1e-10, f"max rel {worst_lp:.1e}")
    assert c.clause("L(2,2) = L2, 20 fields", worst_l22 <= 1e-10, f"max rel {worst_l22:.1e}")


# ---------------------------------------------------------------- 4

def test_c4_inequality_ledger(criterion, dipole_runs):
    c = criterion(4, "inequality ledger on the dipole run")
    start = time.perf_counter()
    coarse = simulate(dipole(Grid2D(128, TWO_PI)), 1.0, 1e-3)
    fine, half = dipole_runs[1e-3], dipole_runs[5e-4]
    l_coarse = est.check_lemma28(list(coarse.fields)).fitted_constant
    l_fine = est.check_lemma28(list(fine.fields)).fitted_constant
    rel = abs(l_fine / l_coarse - 1)
    ok = [c.clause("lemma28 C stable under n -> 2n", math.isfinite(l_fine) and rel <= 0.10,
                   f"{l_coarse:.5g} -> {l_fine:.5g}, change {rel:.2%} <= 10%")]
    for name, fn in (("criticality", est.check_criticality), ("dini_velocity", est.check_dini_velocity)):
        a, b = fn(fine).fitted_constant, fn(half).fitted_constant
        r = abs(b / a - 1)
        ok.append(c.clause(f"{name} C stable under dt -> dt/2", r <= 0.20, f"{a:.5g} -> {b:.5g}, change {r:.2%}"))
    ap = est.check_apriori_envelope(fine, l_fine)
    ok.append(c.clause("apriori envelope", ap.passed and ap.margin >= 0, f"margin {ap.margin:.3e}"))
    de = est.check_double_exponential(fine)
    ok.append(c.clause("double exponential", de.passed and de.margin >= 0, f"margin {de.margin:.3e}"))
    fields = ensemble(Grid2D(256, TWO_PI), 50)
    hl = est.check_holder_lorentz(fields, fields[1:] + fields[:1])
    ok.append(c.clause("Holder-Lorentz, 50 fields", hl.passed, f"margin {hl.margin:.3e}"))
    sl = est.check_sobolev_lorentz(fields)
    ok.append(c.clause("Sobolev-Lorentz, 50 fields", sl.passed,
                       f"fitted C {sl.fitted_constant:.4f} <= {est.SOBOLEV_LORENTZ_SHARP:.4f}"))
    elapsed = time.perf_counter() - start + fine.elapsed + half.elapsed
    ok.append(c.clause("runtime", elapsed <= 900, f"{elapsed:.0f} s <= 900 s"))
    assert all(ok)


# ---------------------------------------------------------------- 5

def test_c5_flow_map_audit(criterion):
    c = criterion(5, "flow-map audit")
    g = Grid2D(128, TWO_PI)
    labels = Grid2D(32, TWO_PI)
    traj = simulate(dipole(g), 1.0, 1e-3)
    samplers = {
        "steady gaussian": GridVelocitySampler.from_vorticity([0.0], [gaussian(g)]),
        "evolving dipole": GridVelocitySampler.from_vorticity(traj.times, traj.fields),
    }
    ok = []
    for name, s in samplers.items():
        fwd = advance_flow(s, 0.0, 1.0, 1e-3, grid=labels)
        back = advance_flow(s, 1.0, 0.0, 1e-3, labels=fwd.positions)
        jac = float(np.abs(fwd.jac - 1).max())
        trip = float(np.abs(back.positions - fwd.labels).max())
        ok.append(c.clause(f"{name}: |det grad X - 1|", jac <= 1e-6, f"{jac:.1e} <= 1e-6"))
        ok.append(c.clause(f"{name}: round trip", trip <= 1e-6, f"{trip:.1e} <= 1e-6"))
    theta = math.pi / 4
    rot = advance_flow(RigidRotation(), 0.0, theta, 1e-3, grid=labels)
    a = rot.labels
    want = np.stack([math.cos(theta) * a[..., 0] - math.sin(theta) * a[..., 1],
                     math.sin(theta) * a[..., 0] + math.cos(theta) * a[..., 1]], -1)
    err = float(np.abs(rot.positions - want).max())
    ok.append(c.clause("rigid rotation closed form", err <= 1e-8, f"{err:.1e} <= 1e-8"))
    assert all(ok)


# ---------------------------------------------------------------- 6

def test_c6_mollifier_facts(criterion):
    c = criterion(6, "mollifier facts")
    g = Grid2D(128, TWO_PI)
    worst = {"L1": -np.inf, "Linf": -np.inf, "W11": -np.inf, "W21": -np.inf}
    comm = 0.0
    for f in field_suite(g, 20):
        ders = {(a, o): spectral_derivative(f, a, o) for a in (1, 2) for o in (1, 2)}
        for k in (4, 8, 16):
            eps = k * g.dx
            fe = mollify(f, eps)
            worst["L1"] = max(worst["L1"], sobolev_norm(fe, 0) - sobolev_norm(f, 0))
            worst["Linf"] = max(worst["Linf"], lp_norm(fe, np.inf) - lp_norm(f, np.inf))
            worst["W11"] = max(worst["W11"], sobolev_norm(fe, 1) - sobolev_norm(f, 1))
            worst["W21"] = max(worst["W21"], sobolev_norm(fe, 2) - sobolev_norm(f, 2))
            for (a, o), d in ders.items():
                gap = np.abs(spectral_derivative(fe, a, o).values - mollify(d, eps).values).max()
                comm = max(comm, float(gap))
    ok = [c.clause(f"{name} domination", v <= 1e-8, f"max excess {v:.1e} <= 1e-8") for name, v in worst.items()]
    ok.append(c.clause("derivative commutation, |alpha| <= 2", comm <= 1e-8, f"max gap {comm:.1e} <= 1e-8"))
    assert all(ok)


# ---------------------------------------------------------------- 7

def test_c7_equality_case_envelopes(criterion):
    c = criterion(7, "equality-case envelopes")
    t = np.linspace(0.0, 1.0, 1001)
    one = np.ones_like(t)
    gr = est.gronwall_envelope(t, np.exp(t), one, one)
    ok = [c.clause("Gronwall, L = e^t", gr.passed and abs(gr.margin) <= 1e-9, f"|margin| {abs(gr.margin):.1e}")]
    s = np.linspace(0.0, 0.95, 951)
    os_ = est.osgood_envelope(s, 1 / (1 - s), 1.0, np.ones_like(s), mu_exponent=2)
    ok.append(c.clause("Osgood mu = r^2, rho = 1/(1-t)", os_.passed and abs(os_.margin) <= 1e-9,
                       f"|margin| {abs(os_.margin):.1e}"))
    assert all(ok)


# ---------------------------------------------------------------- 8

def test_c8_weak_residual_bound(criterion, dipole_runs):
    c = criterion(8, "weak-solution residual")
    chk = est.check_weak_solution(dipole_runs[1e-3])
    ratio = float(np.max(chk.lhs / (chk.rhs / 1e-3)))
    assert c.clause("max residual / normalization, 5 probes", chk.passed,
                    f"{ratio:.1e} <= 1e-3 (max residual {np.max(chk.lhs):.2e})")


@pytest.mark.xfail(strict=True, reason="residual sits on a spatial floor far below the time-stepping error")
def test_c8_weak_residual_halves(criterion, dipole_runs):
    c = criterion(8, "weak-solution residual")
    a = float(np.max(est.check_weak_solution(dipole_runs[1e-3]).lhs))
    b = float(np.max(est.check_weak_solution(dipole_runs[5e-4]).lhs))
    assert c.clause("residual halves under dt -> dt/2", b <= a / 2, f"{a:.4e} -> {b:.4e}")
