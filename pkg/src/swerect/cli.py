"""Command line entry point: ``swerect <command> --config FILE [--out DIR]``.

Config files are INI style with sections ``[grid]``, ``[params]`` and
``[scenario]``. Exit status is 0 on success, 2 when the flow leaves the
supercritical regime, an iteration fails to converge or a check fails,
and 1 on usage or configuration errors.
"""

from __future__ import annotations

import argparse
import configparser
import os
import sys
from dataclasses import asdict, fields
from pathlib import Path

import numpy as np

from . import scenarios as sc
from .algebra import check_supercritical
from .core import Grid, Params, State, l2_norm
from .errors import (
    IntegrationFailure,
    NoConvergence,
    NotStrongSupercritical,
    NotSupercritical,
    RegimeLost,
    SweRectError,
)
from .io import emit_series, emit_snapshot, emit_summary
from .linear import energy_constant, resolvent_solve
from .nonlinear import picard_solve
from .prep import compatibility_residual, compatible_bump

COMMANDS = ("check", "stationary", "linear", "resolvent", "picard", "converge", "energy")
REGIME_ERRORS = (RegimeLost, NoConvergence, NotSupercritical, NotStrongSupercritical, IntegrationFailure)


class ConfigError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(1, f"{self.prog}: error: {message}\n")


# ---------------------------------------------------------------------------
# config


class Config:
    def __init__(self, path: Path):
        self.path = path
        cp = configparser.ConfigParser(inline_comment_prefixes=("#", ";"))
        try:
            with open(path) as fh:
                cp.read_file(fh)
        except OSError as exc:
            raise ConfigError(f"cannot read config {path}: {exc.strerror}") from None
        except configparser.Error as exc:
            raise ConfigError(f"malformed config {path}: {exc}") from None
        unknown = set(cp.sections()) - {"grid", "params", "scenario"}
        if unknown:
            raise ConfigError(f"unknown section(s): {', '.join(sorted(unknown))}")
        self.cp = cp

    def _section(self, name):
        return self.cp[name] if self.cp.has_section(name) else {}

    def get(self, key, default=None, cast=float):
        sec = self._section("scenario")
        if key not in sec:
            return default
        try:
            return cast(sec[key])
        except ValueError:
            raise ConfigError(f"[scenario] {key} = {sec[key]!r} is not a valid {cast.__name__}") from None

    def triple(self, key, default):
        raw = self.get(key, None, str)
        if raw is None:
            return tuple(default)
        try:
            vals = tuple(float(x) for x in raw.replace(",", " ").split())
        except ValueError:
            raise ConfigError(f"[scenario] {key} must be three numbers") from None
        if len(vals) != 3:
            raise ConfigError(f"[scenario] {key} must be three numbers")
        return vals

    def ints(self, key, default):
        raw = self.get(key, None, str)
        if raw is None:
            return tuple(default)
        try:
            return tuple(int(x) for x in raw.replace(",", " ").split())
        except ValueError:
            raise ConfigError(f"[scenario] {key} must be a list of integers") from None

    def grid(self) -> Grid:
        sec = self._section("grid")
        try:
            n = int(sec.get("n", 33))
            nx = int(sec.get("nx", n))
            ny = int(sec.get("ny", n))
            L = float(sec.get("length", 1.0))
            return Grid(float(sec.get("L1", L)), float(sec.get("L2", L)), nx, ny)
        except ValueError as exc:
            raise ConfigError(f"[grid]: {exc}") from None

    def params(self) -> Params:
        sec = self._section("params")
        names = {f.name: f.type for f in fields(Params)}
        kw = {}
        for key, val in sec.items():
            if key not in names:
                raise ConfigError(f"[params] unknown key {key!r}")
            try:
                kw[key] = int(val) if key == "m" else float(val)
            except ValueError:
                raise ConfigError(f"[params] {key} = {val!r} is not a number") from None
        try:
            return Params(**kw)
        except ValueError as exc:
            raise ConfigError(f"[params]: {exc}") from None

    def name(self, default):
        return self.get("name", default, str)


# ---------------------------------------------------------------------------
# commands; each returns a RunResult


def cmd_check(cfg: Config, rng) -> sc.RunResult:
    grid, p = cfg.grid(), cfg.params()
    kind = cfg.name("constant")
    state = cfg.triple("state", sc.BASE_FLOW)
    if kind == "constant":
        s = State.constant(grid, *state)
    elif kind == "profile":
        s = sc.stationary_scenario("profile", state, p, grid).state
    else:
        raise KeyError(f"unknown check scenario {kind!r}; choose constant or profile")
    rep = check_supercritical(s, p, strong=bool(cfg.get("strong", 0, int)))
    print(rep.summary())
    res = sc.RunResult(f"check_{kind}")
    res.checks["supercritical"] = rep.ok
    res.constants["margins"] = rep.worst_margins
    if rep.ok:
        ident = sc.characteristic_identities(s, p.g)
        print(f"characteristic identities: diag error {ident['diag_error']:.3e}, "
              f"eigenvalue rel. error {ident['lambda_rel_error']:.3e}")
        res.constants.update(ident)
        res.checks["characteristic_identities"] = ident["diag_error"] < 1e-9 and ident["lambda_rel_error"] < 1e-9
    res.snapshots["state"] = s
    return res


def cmd_stationary(cfg: Config, rng) -> sc.RunResult:
    grid, p = cfg.grid(), cfg.params()
    kind = cfg.name("profile")
    sol = sc.stationary_scenario(kind, cfg.triple("inlet", sc.BASE_FLOW), p, grid)
    res = sc.RunResult(f"stationary_{kind}")
    res.constants["residual_norm"] = sol.residual_norm
    res.constants.update(sol.diagnostics)
    res.checks["strong_supercritical"] = check_supercritical(sol.state, p, strong=True).ok
    res.snapshots["stationary"] = sol.state
    print(f"stationary {kind}: residual {sol.residual_norm:.6e}")
    return res


def cmd_linear(cfg: Config, rng) -> sc.RunResult:
    name = cfg.name("constant")
    kw = dict(
        grid=cfg.grid(),
        p=cfg.params(),
        t_end=cfg.get("t_end", 0.2),
        amplitude=cfg.get("amplitude", 0.02),
        width=cfg.get("width", 0.25),
        cfl=cfg.get("cfl", 0.5),
        samples=cfg.get("samples", 33, int),
    )
    res = sc.run_linear(name, **kw)
    res.checks["compatibility"] = max(compatibility_residual(s, 1) for s in res.samples) <= 1e-6
    print(f"linear {name}: fitted r1 = {res.constants['fitted_r1']:.6e}, bound ok = {res.checks['gronwall_bound']}")
    return res


def cmd_resolvent(cfg: Config, rng) -> sc.RunResult:
    grid, p = cfg.grid(), cfg.params()
    bg = State.constant(grid, *cfg.triple("background", sc.BASE_FLOW))
    w_hat = energy_constant(bg, p)
    omega = cfg.get("omega", None)
    if omega is None:
        omega = cfg.get("omega_factor", 10.0) * w_hat
    F = compatible_bump(grid, p.m, cfg.get("amplitude", 1.0), width=cfg.get("width", 0.3))
    U, info = resolvent_solve(bg, F, omega, p, cfl=cfg.get("cfl", 0.5), return_info=True)
    res = sc.RunResult("resolvent")
    res.constants.update(omega=omega, omega_hat=w_hat, residual=info.residual, truncation=info.truncation)
    if omega > w_hat:
        bound = l2_norm(F) / (omega - w_hat)
        res.constants["l2_solution"] = l2_norm(U)
        res.constants["l2_bound"] = bound
        res.checks["omega_bound"] = l2_norm(U) <= 1.1 * bound
    res.snapshots["resolvent"] = U
    print(f"resolvent: omega = {omega:.6g}, residual {info.residual:.3e}")
    return res


def cmd_picard(cfg: Config, rng) -> sc.RunResult:
    grid, p = cfg.grid(), cfg.params()
    name = cfg.name("bump")
    if name == "bump":
        res = sc.run_picard(
            grid=grid,
            p=p,
            t_end=cfg.get("t_end", 0.2),
            amplitude_factor=cfg.get("amplitude_factor", 0.5),
            width=cfg.get("width", 0.3),
            halvings=cfg.get("halvings", 2, int),
            tol=cfg.get("tol", 1e-9),
            max_iter=cfg.get("max_iter", 30, int),
        )
    elif name == "profile":
        Us = sc.random_profile(rng, p, grid)
        amp = cfg.get("amplitude_factor", 0.5) * p.delta
        U0 = compatible_bump(grid, p.m, amp, width=cfg.get("width", 0.3))
        traj, rep = picard_solve(U0, Us, p, cfg.get("t_end", 0.1), tol=cfg.get("tol", 1e-9),
                                 max_iter=cfg.get("max_iter", 30, int))
        res = sc.RunResult("picard_profile")
        res.checks["converged"] = rep.converged
        res.constants.update(max_ratio=rep.max_ratio, iterates=rep.iterates, final_residual=rep.final_residual)
        res.series["iterations_0"] = ("iteration", rep.columns())
        res.samples = list(traj.states)
        res.snapshots["final"] = traj.states[-1]
    else:
        raise KeyError(f"unknown picard scenario {name!r}; choose bump or profile")
    if res.samples:
        res.checks["compatibility"] = max(compatibility_residual(s, 1) for s in res.samples) <= 1e-6
    print(f"picard {name}: " + ", ".join(f"{k}={v}" for k, v in sorted(res.checks.items())))
    return res


def cmd_converge(cfg: Config, rng) -> sc.RunResult:
    p = cfg.params()
    name = cfg.name("linear")
    ns = cfg.ints("grids", (33, 65, 129))
    if name == "linear":
        res = sc.linear_convergence(ns, p, t_end=cfg.get("t_end", 0.2), cfl=cfg.get("cfl", 0.5))
    elif name == "resolvent":
        res = sc.resolvent_convergence(ns, p, omega=cfg.get("omega", 1.0))
    else:
        raise KeyError(f"unknown convergence study {name!r}; choose linear or resolvent")
    print(f"converge {name}: orders " + ", ".join(f"{o:.3f}" for o in res.constants["orders"]))
    return res


def cmd_energy(cfg: Config, rng) -> sc.RunResult:
    grid = cfg.grid()
    t_end = cfg.get("t_end", 0.2)
    res = sc.RunResult("energy")
    for name in sc.LINEAR_SCENARIOS:
        sub = sc.run_linear(name, grid=grid, t_end=t_end)
        res.checks[f"{name}_gronwall"] = sub.checks["gronwall_bound"]
        res.checks[f"{name}_compatibility"] = max(compatibility_residual(s, 1) for s in sub.samples) <= 1e-6
        res.constants[f"{name}_fitted_r1"] = sub.constants["fitted_r1"]
        res.series[f"energy_{name}"] = sub.series["energy"]
    I0 = sc.per_step_energy(grid, t_end)
    rel = np.diff(I0) / np.maximum(I0[:-1], np.finfo(float).tiny)
    res.checks["constant_monotone"] = bool(np.all(rel <= 1e-12))
    res.constants["constant_max_step_growth"] = float(np.max(rel))
    qc = sc.quasi_contraction(cfg.get("contraction_n", 10, int))
    res.checks["quasi_contraction"] = qc["ok"]
    res.constants["step_matrix_norm"] = qc["norm"]
    res.constants["step_matrix_limit"] = qc["limit"]
    for k, v in sorted(res.checks.items()):
        print(f"{k}: {'PASS' if v else 'FAIL'}")
    return res


HANDLERS = {
    "check": cmd_check,
    "stationary": cmd_stationary,
    "linear": cmd_linear,
    "resolvent": cmd_resolvent,
    "picard": cmd_picard,
    "converge": cmd_converge,
    "energy": cmd_energy,
}


# ---------------------------------------------------------------------------
# driver


def _jsonable(obj):
    if isinstance(obj, dict):
        return {str(k): _jsonable(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_jsonable(v) for v in obj]
    if isinstance(obj, (np.floating, float)):
        return float(obj)
    if isinstance(obj, (np.integer, int, bool, np.bool_)):
        return obj.item() if hasattr(obj, "item") else obj
    return obj


def write_outputs(res: sc.RunResult, out: Path, summary: dict):
    out.mkdir(parents=True, exist_ok=True)
    for stem, state in sorted(res.snapshots.items()):
        emit_snapshot(state, out / f"{stem}.csv")
    for stem, (schema, cols) in sorted(res.series.items()):
        emit_series(cols, out / f"{stem}.csv", schema)
    emit_summary(_jsonable(summary), out / "summary.json")


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="swerect", description="Supercritical shallow water solvers on a rectangle.")
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)
    for name in COMMANDS:
        sp = sub.add_parser(name, help=HANDLERS[name].__name__.replace("cmd_", "") + " scenario")
        sp.add_argument("--config", required=True, type=Path, help="INI file with [grid] [params] [scenario]")
        sp.add_argument("--out", type=Path, default=None, help="output directory (default $SWERECT_OUT or ./out)")
        sp.add_argument("--seed", type=int, default=0, help="seed for randomised scenarios")
        sp.add_argument("--threads", type=int, default=0, help="worker threads (0 = auto); recorded only")
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    out = args.out or Path(os.environ.get("SWERECT_OUT", "out"))
    try:
        cfg = Config(args.config)
        cfg.grid()
        cfg.params()
    except ConfigError as exc:
        print(f"swerect: {exc}", file=sys.stderr)
        parser.print_usage(sys.stderr)
        return 1
    rng = np.random.default_rng(args.seed)
    summary = {
        "command": args.command,
        "config": str(args.config),
        "seed": args.seed,
        "threads": args.threads,
        "grid": asdict(cfg.grid()),
        "params": asdict(cfg.params()),
    }
    try:
        res = HANDLERS[args.command](cfg, rng)
    except (KeyError, ConfigError) as exc:
        msg = exc.args[0] if exc.args else str(exc)
        print(f"swerect: {msg}", file=sys.stderr)
        return 1
    except REGIME_ERRORS as exc:
        summary.update(scenario=args.command, status="failed", error=type(exc).__name__, message=str(exc))
        rep = getattr(exc, "report", None)
        if rep is not None and hasattr(rep, "diffs"):
            summary["report"] = {"iterates": rep.iterates, "diffs": rep.diffs, "ratios": rep.ratios}
        write_outputs(sc.RunResult(args.command), out, summary)
        print(f"swerect: {type(exc).__name__}: {exc}", file=sys.stderr)
        return 2
    except SweRectError as exc:
        print(f"swerect: {type(exc).__name__}: {exc}", file=sys.stderr)
        return 1
    summary.update(
        scenario=res.name,
        status="ok" if res.ok else "check_failed",
        checks=res.checks,
        constants=res.constants,
    )
    write_outputs(res, out, summary)
    return 0 if res.ok else 2


if __name__ == "__main__":
    sys.exit(main())
