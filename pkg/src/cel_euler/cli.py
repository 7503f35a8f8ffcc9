"""Batch experiment runner.

Subcommands: ``run``, ``verify``, ``norms <snapshot>`` and ``oracle-compare``.
Exit codes: 0 when every enabled check passes (or only fits a constant),
2 when an inequality fails, 1 on configuration or runtime errors.
"""

import argparse
import math
import os
import sys
from dataclasses import dataclass, field, fields, replace

import numpy as np

from . import estimates
from .biot_savart import velocity_direct, velocity_spectral
from .errors import CelError, CFLError, ConfigurationError, InstabilityError
from .fields import Grid2D, ScalarField, read_field_csv, read_snapshot, write_snapshot
from .norms import norm_report, write_norm_csv, NORM_CSV_HEADER
from .presets import PRESETS, ensemble, make_preset
from .solver import METHODS, simulate


@dataclass(frozen=True)
class ExperimentConfig:
    preset: str = "gaussian"
    input: str = ""
    n: int = 256
    L: float = 2 * math.pi
    dt: float = 1e-3
    T: float = 1.0
    checkpoints: int = 21
    method: str = "spectral"
    eps_list: tuple = ()
    seed: int = 0
    kmax: int = 4
    ensemble: int = 50
    checks: tuple = estimates.DEFAULT_CHECKS
    output: str = "out"

    def validate(self):
        for key in ("n", "L", "dt", "T", "checkpoints", "kmax"):
            v = getattr(self, key)
            if not (isinstance(v, (int, float)) and math.isfinite(v) and v > 0):
                raise ConfigurationError(f"{key} must be positive, got {v!r}")
        if self.seed < 0 or self.ensemble < 0:
            raise ConfigurationError("seed and ensemble must be non-negative")
        if self.checkpoints < 2:
            raise ConfigurationError("checkpoints must be at least 2")
        if self.method not in METHODS:
            raise ConfigurationError(f"method must be one of {', '.join(METHODS)}, got {self.method!r}")
        if not self.input and self.preset not in PRESETS:
            raise ConfigurationError(f"preset must be one of {', '.join(PRESETS)}, got {self.preset!r}")
        if any(not (e > 0) for e in self.eps_list):
            raise ConfigurationError("eps_list entries must be positive")
        unknown = [c for c in self.checks if c not in estimates.CHECK_NAMES]
        if unknown:
            raise ConfigurationError(
                f"unknown checks {', '.join(unknown)}; valid: {', '.join(estimates.CHECK_NAMES)}")
        Grid2D(self.n, self.L)
        return self


_TYPES = {f.name: f.type.__name__ for f in fields(ExperimentConfig)}


def _parse_value(text, kind, where):
    text = text.strip()
    try:
        if kind == "str":
            if len(text) < 2 or text[0] != '"' or text[-1] != '"':
                raise ValueError("expected a double-quoted string")
            return text[1:-1]
        if kind == "int":
            return int(text)
        if kind == "float":
            return float(text)
        if kind == "tuple":
            if not (text.startswith("[") and text.endswith("]")):
                raise ValueError("expected a [list]")
            items = [p.strip() for p in text[1:-1].split(",") if p.strip()]
            return tuple(p[1:-1] if p.startswith('"') else float(p) for p in items)
    except ValueError as exc:
        raise ConfigurationError(f"{where}: {exc}") from None
    raise ConfigurationError(f"{where}: unsupported type {kind}")


def parse_config(text, source="<config>"):
    """Flat ``key = value`` lines (a TOML subset); ``#`` starts a comment."""
    values = {}
    for lineno, raw in enumerate(text.splitlines(), 1):
        line = raw.split("#", 1)[0].strip() if '"' not in raw else _strip_comment(raw)
        if not line:
            continue
        where = f"{source}:{lineno}"
        if "=" not in line:
            raise ConfigurationError(f"{where}: expected 'key = value', got {raw.strip()!r}")
        key, value = (s.strip() for s in line.split("=", 1))
        if key not in _TYPES:
            raise ConfigurationError(f"{where}: unknown key {key!r}")
        if key in values:
            raise ConfigurationError(f"{where}: duplicate key {key!r}")
        parsed = _parse_value(value, _TYPES[key], f"{where}: {key}")
        if key == "checks" and any(not isinstance(c, str) for c in parsed):
            raise ConfigurationError(f"{where}: checks must be quoted names")
        if key == "eps_list" and any(isinstance(e, str) for e in parsed):
            raise ConfigurationError(f"{where}: eps_list must hold numbers")
        values[key] = parsed
    try:
        return ExperimentConfig(**values).validate()
    except ConfigurationError as exc:
        raise ConfigurationError(f"{source}: {exc}") from None


def _strip_comment(raw):
    out, quoted = [], False
    for ch in raw:
        if ch == '"':
            quoted = not quoted
        if ch == "#" and not quoted:
            break
        out.append(ch)
    return "".join(out).strip()


def emit_config(cfg):
    lines = []
    for f in fields(ExperimentConfig):
        v = getattr(cfg, f.name)
        kind = _TYPES[f.name]
        if kind == "str":
            text = f'"{v}"'
        elif kind == "tuple":
            text = "[" + ", ".join(f'"{x}"' if isinstance(x, str) else repr(float(x)) for x in v) + "]"
        elif kind == "float":
            text = repr(float(v))
        else:
            text = str(int(v))
        lines.append(f"{f.name} = {text}")
    return "\n".join(lines) + "\n"


def _initial_data(cfg):
    if cfg.input:
        try:
            f = read_field_csv(cfg.input) if cfg.input.endswith(".csv") else read_snapshot(cfg.input)
        except OSError as exc:
            raise ConfigurationError(f"cannot read input {cfg.input!r}: {exc.strerror}") from None
        return f
    return make_preset(cfg.preset, n=cfg.n, L=cfg.L, seed=cfg.seed, kmax=cfg.kmax)


def _trajectory(cfg, omega0):
    probes = tuple(p for p in estimates.preset_test_functions() if p.support_within(omega0.grid, cfg.T))
    cps = np.linspace(0.0, cfg.T, cfg.checkpoints)
    return simulate(omega0, cfg.T, cfg.dt, checkpoints=cps, method=cfg.method, probes=probes, config=cfg)


def _ensemble(cfg, grid, names):
    needs = set(names) & (set(estimates.ENSEMBLE_CHECKS) | {"lemma28", "apriori_envelope"})
    return ensemble(grid, cfg.ensemble, seed=cfg.seed, kmax=cfg.kmax) if needs and cfg.ensemble else []


def _ensure_output(path):
    os.makedirs(path, exist_ok=True)
    if not os.access(path, os.W_OK):
        raise ConfigurationError(f"output directory {path!r} is not writable")


def _exit_code(checks):
    return 2 if any(c.failed for c in checks) else 0


def run(cfg, out=None):
    out = out or sys.stdout
    _ensure_output(cfg.output)
    omega0 = _initial_data(cfg)
    traj = _trajectory(cfg, omega0)
    checks = estimates.evaluate(cfg.checks, traj, _ensemble(cfg, omega0.grid, cfg.checks), cfg.eps_list)
    fdir = os.path.join(cfg.output, "fields")
    os.makedirs(fdir, exist_ok=True)
    with open(os.path.join(fdir, "times.csv"), "w", newline="\n") as fh:
        fh.write("index,t,file\n")
        for k, (t, f) in enumerate(zip(traj.times, traj.fields)):
            name = f"omega_{k:04d}.cel"
            write_snapshot(os.path.join(fdir, name), f)
            fh.write(f"{k},{float(t)!r},{name}\n")
    write_norm_csv(os.path.join(cfg.output, "norms.csv"), traj.norm_reports(with_dini=True))
    estimates.write_ledger_csv(os.path.join(cfg.output, "ledger.csv"), checks)
    text = estimates.summary(checks)
    with open(os.path.join(cfg.output, "summary.txt"), "w", newline="\n") as fh:
        fh.write(text + "\n")
    with open(os.path.join(cfg.output, "config.toml"), "w", newline="\n") as fh:
        fh.write(emit_config(cfg))
    print(text, file=out)
    return _exit_code(checks)


def verify(cfg, names, out=None):
    out = out or sys.stdout
    if not names:
        raise ConfigurationError(f"no checks given; valid: {', '.join(estimates.CHECK_NAMES)}")
    unknown = [n for n in names if n not in estimates.CHECK_NAMES]
    if unknown:
        raise ConfigurationError(f"unknown checks {', '.join(unknown)}; valid: {', '.join(estimates.CHECK_NAMES)}")
    omega0 = _initial_data(cfg)
    traj = _trajectory(cfg, omega0) if set(names) & set(estimates.TRAJECTORY_CHECKS) else None
    checks = estimates.evaluate(names, traj, _ensemble(cfg, omega0.grid, names), cfg.eps_list)
    print(estimates.summary(checks), file=out)
    for c in checks:
        if c.status == "fitted":
            print(f"{c.name}: empirical C = {c.fitted_constant:.10g}", file=out)
    return _exit_code(checks)


def norms(path, output=None, out=None):
    out = out or sys.stdout
    f = read_field_csv(path) if path.endswith(".csv") else read_snapshot(path)
    rep = norm_report(f)
    if output:
        write_norm_csv(output, [rep])
    else:
        print(NORM_CSV_HEADER, file=out)
        print(rep.csv_row(), file=out)
    return 0


def oracle_compare(n=128, L_values=(2 * math.pi, 4 * math.pi), output=None, out=None):
    out = out or sys.stdout
    """Direct quadrature against the analytic Gaussian-vortex velocity, then spectral against direct on the dipole."""
    rows = []
    g = Grid2D(n, L_values[0])
    gauss = ScalarField(g, np.exp(-g.radius**2))
    d = velocity_direct(gauss)
    r2 = np.where(g.radius > 0, g.radius**2, 1.0)
    prof = np.where(g.radius > 0, (1 - np.exp(-g.radius**2)) / (2 * r2), 0.5)
    X1, X2 = g.mesh
    inner = g.radius <= 2.0
    err = max(np.abs(d.u1.values + X2 * prof)[inner].max(), np.abs(d.u2.values - X1 * prof)[inner].max())
    ref = np.hypot(X2 * prof, X1 * prof)[inner].max()
    gauss_err = float(err / ref)
    rows.append(("gaussian_direct_vs_analytic", g.L, gauss_err, 1e-3))
    for L in L_values:
        g = Grid2D(n, L)
        X1, _ = g.mesh
        dip = ScalarField(g, -2 * X1 * np.exp(-g.radius**2))
        rows.append(("dipole_spectral_vs_direct", L, dipole_l2_error(dip), 1e-2))
    ok = all(e <= tol for _, _, e, tol in rows)
    dips = [e for name, _, e, _ in rows if name.startswith("dipole")]
    decreasing = all(b < a for a, b in zip(dips, dips[1:]))
    lines = ["case,L,rel_error,tolerance,pass"] + [
        f"{name},{L!r},{e!r},{tol!r},{'true' if e <= tol else 'false'}" for name, L, e, tol in rows]
    text = "\n".join(lines) + "\n"
    if output:
        with open(output, "w", newline="\n") as fh:
            fh.write(text)
    out.write(text)
    print(f"dipole error decreasing in L: {decreasing}", file=out)
    return 0 if ok and decreasing else 2


def dipole_l2_error(omega):
    """Relative L^2 distance between the spectral and direct velocities over the whole box."""
    s = velocity_spectral(omega)
    d = velocity_direct(omega)
    num = np.sum((s.u1.values - d.u1.values) ** 2 + (s.u2.values - d.u2.values) ** 2)
    den = np.sum(d.u1.values**2 + d.u2.values**2)
    return float(np.sqrt(num / den))


def _config_from_args(args):
    cfg = ExperimentConfig()
    if args.config:
        try:
            with open(args.config) as fh:
                cfg = parse_config(fh.read(), args.config)
        except OSError as exc:
            raise ConfigurationError(f"cannot read config {args.config!r}: {exc.strerror}") from None
    updates = {}
    for f in fields(ExperimentConfig):
        v = getattr(args, f.name, None)
        if v is None:
            continue
        updates[f.name] = tuple(v) if _TYPES[f.name] == "tuple" else v
    return replace(cfg, **updates).validate()


def _add_config_flags(p):
    p.add_argument("--config", help="flat key = value config file")
    p.add_argument("--preset", choices=PRESETS)
    p.add_argument("--input", help="initial vorticity snapshot (.cel) or CSV")
    p.add_argument("--n", type=int)
    p.add_argument("--L", type=float)
    p.add_argument("--dt", type=float)
    p.add_argument("--T", type=float)
    p.add_argument("--checkpoints", type=int)
    p.add_argument("--method", choices=METHODS)
    p.add_argument("--eps-list", dest="eps_list", type=float, nargs="+")
    p.add_argument("--seed", type=int)
    p.add_argument("--kmax", type=int)
    p.add_argument("--ensemble", type=int)
    p.add_argument("--output")


def build_parser():
    parser = argparse.ArgumentParser(prog="cel-euler", description=__doc__.splitlines()[0])
    sub = parser.add_subparsers(dest="command", required=True)
    p_run = sub.add_parser("run", help="simulate, write fields, norms and the inequality ledger")
    _add_config_flags(p_run)
    p_run.add_argument("--checks", nargs="+", help="override the enabled checks")
    p_ver = sub.add_parser("verify", help="evaluate selected ledger checks")
    _add_config_flags(p_ver)
    p_ver.add_argument("--checks", nargs="*", default=None)
    p_norm = sub.add_parser("norms", help="norm report for a snapshot")
    p_norm.add_argument("snapshot")
    p_norm.add_argument("--output")
    p_or = sub.add_parser("oracle-compare", help="spectral versus direct Biot-Savart")
    p_or.add_argument("--n", type=int, default=128)
    p_or.add_argument("--output")
    return parser


def main(argv=None):
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        if args.command == "run":
            return run(_config_from_args(args))
        if args.command == "verify":
            if not args.checks:
                parser.print_usage(sys.stderr)
                print(f"error: give --checks from: {', '.join(estimates.CHECK_NAMES)}", file=sys.stderr)
                return 1
            return verify(_config_from_args(args), args.checks)
        if args.command == "norms":
            return norms(args.snapshot, args.output)
        if args.command == "oracle-compare":
            return oracle_compare(n=args.n, output=args.output)
    except CFLError as exc:
        print(f"error: {exc} (suggested dt = {exc.suggested_dt:.6g})", file=sys.stderr)
        return 1
    except InstabilityError as exc:
        print(f"error: instability: {exc}", file=sys.stderr)
        return 1
    except ConfigurationError as exc:
        print(f"error: invalid configuration: {exc}", file=sys.stderr)
        return 1
    except (CelError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    return 1


if __name__ == "__main__":
    sys.exit(main())
