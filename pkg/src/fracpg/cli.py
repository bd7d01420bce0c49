"""Configuration-driven command line front end.

Modes: ``solve`` a single problem, ``sweep`` a p-refinement study, ``verify``
the operator-identity suite, ``infsup`` the discrete stability surrogate.
Configs are flat key/value text with dotted section keys (see README for the
schema).  Results are printed as plain-text tables and written to CSV with
%.12e formatting; CSV writes go through a temp file and an atomic rename so
failures never leave partial output.

Exit codes: 0 success, 1 validation error, 2 numerical failure.
"""

from __future__ import annotations

import argparse
import csv
import os
import sys
import tempfile
import time
from dataclasses import dataclass, field
from typing import Optional

import numpy as np

from .analysis import SweepAxis, convergence_sweep, discrete_inf_sup, solve_manufactured
from .checks import run_all_checks
from .manufactured import CaseKind, ManufacturedCase
from .pg_assembly import ProblemSpec, Resolution
from .solver import SingularMatrixError

__all__ = ["RunConfig", "ConfigError", "parse_config", "run_config", "verify_suite", "main"]

_MODES = ("solve", "sweep", "verify", "infsup")


class ConfigError(ValueError):
    """Schema violation in a run configuration; message carries the field path."""


@dataclass
class RunConfig:
    mode: str
    problem: Optional[ProblemSpec] = None
    case: Optional[ManufacturedCase] = None
    sweep_axis: Optional[SweepAxis] = None
    sweep_orders: list = field(default_factory=list)
    sweep_fixed_order: Optional[int] = None
    solve_n_time: Optional[int] = None
    solve_m_space: Optional[tuple] = None
    infsup_orders: list = field(default_factory=list)
    output_path: Optional[str] = None
    quad_order: Optional[int] = None
    seed: int = 20240809
    tolerance_scale: float = 1.0


def _read_pairs(path: str) -> dict:
    pairs = {}
    with open(path, "r", encoding="utf-8") as fh:
        for lineno, raw in enumerate(fh, 1):
            line = raw.split("#", 1)[0].strip()
            if not line:
                continue
            if "=" not in line:
                raise ConfigError(f"{path}:{lineno}: expected 'key = value'")
            key, val = (part.strip() for part in line.split("=", 1))
            if not key:
                raise ConfigError(f"{path}:{lineno}: empty key")
            pairs[key] = val
    return pairs


def _get_float(pairs, key, default=None):
    if key not in pairs:
        if default is None:
            raise ConfigError(f"missing required key '{key}'")
        return default
    try:
        return float(pairs[key])
    except ValueError as exc:
        raise ConfigError(f"key '{key}': not a number ({pairs[key]!r})") from exc


def _get_int(pairs, key, default=None):
    if key not in pairs:
        if default is None:
            raise ConfigError(f"missing required key '{key}'")
        return default
    try:
        return int(pairs[key])
    except ValueError as exc:
        raise ConfigError(f"key '{key}': not an integer ({pairs[key]!r})") from exc


def _get_float_list(pairs, key, d, default=None):
    if key not in pairs:
        if default is None:
            raise ConfigError(f"missing required key '{key}'")
        vals = [default] * d
    else:
        try:
            vals = [float(v) for v in pairs[key].split(",")]
        except ValueError as exc:
            raise ConfigError(f"key '{key}': expected comma-separated numbers") from exc
        if len(vals) == 1:
            vals = vals * d
    if len(vals) != d:
        raise ConfigError(f"key '{key}': expected {d} values, got {len(vals)}")
    return tuple(vals)


def _parse_problem(pairs) -> ProblemSpec:
    raw_intervals = pairs.get("problem.intervals", "-1:1")
    intervals = []
    for part in raw_intervals.split(","):
        bits = part.split(":")
        if len(bits) != 2:
            raise ConfigError("key 'problem.intervals': expected 'a:b[,a:b...]'")
        try:
            intervals.append((float(bits[0]), float(bits[1])))
        except ValueError as exc:
            raise ConfigError("key 'problem.intervals': endpoints must be numbers") from exc
    d = len(intervals)
    try:
        return ProblemSpec(
            d=d,
            T=_get_float(pairs, "problem.T", 2.0),
            intervals=tuple(intervals),
            tau=_get_float(pairs, "problem.tau"),
            mu=_get_float_list(pairs, "problem.mu", d, default=0.25),
            nu=_get_float_list(pairs, "problem.nu", d),
            c_left=_get_float_list(pairs, "problem.c_left", d, default=0.0),
            c_right=_get_float_list(pairs, "problem.c_right", d, default=0.0),
            kappa_left=_get_float_list(pairs, "problem.kappa_left", d, default=0.0),
            kappa_right=_get_float_list(pairs, "problem.kappa_right", d, default=0.0),
            gamma_coeff=_get_float(pairs, "problem.gamma", 0.0),
        )
    except ValueError as exc:
        raise ConfigError(f"problem.*: {exc}") from exc


def _parse_case(pairs) -> ManufacturedCase:
    kind = pairs.get("case.kind")
    if kind is None:
        raise ConfigError("missing required key 'case.kind'")
    kind = kind.strip().lower()
    if kind in ("case1", "case_i", "i"):
        return ManufacturedCase(
            kind=CaseKind.CASE_I,
            p1=_get_float(pairs, "case.p1", 5.05),
            p2=_get_float(pairs, "case.p2", 5.75),
            p3=_get_float(pairs, "case.p3", 5.2),
        )
    if kind in ("case2", "case_ii", "ii"):
        return ManufacturedCase(
            kind=CaseKind.CASE_II,
            p1=_get_float(pairs, "case.p1", 5.05),
            n_freq=_get_int(pairs, "case.n_freq", 1),
        )
    raise ConfigError(f"key 'case.kind': unknown kind {kind!r}")


def _parse_int_list(pairs, key) -> list:
    if key not in pairs:
        raise ConfigError(f"missing required key '{key}'")
    try:
        vals = [int(v) for v in pairs[key].split(",")]
    except ValueError as exc:
        raise ConfigError(f"key '{key}': expected comma-separated integers") from exc
    if not vals or any(b <= a for a, b in zip(vals, vals[1:])):
        raise ConfigError(f"key '{key}': orders must be nonempty and increasing")
    return vals


def parse_config(path: str, mode: Optional[str] = None) -> RunConfig:
    """Load and validate a RunConfig; ``mode`` overrides/cross-checks the file."""
    pairs = _read_pairs(path)
    file_mode = pairs.get("mode")
    if mode is None:
        if file_mode is None:
            raise ConfigError("missing required key 'mode'")
        mode = file_mode.strip()
    elif file_mode is not None and file_mode.strip() != mode:
        raise ConfigError(f"config mode '{file_mode.strip()}' conflicts with command '{mode}'")
    if mode not in _MODES:
        raise ConfigError(f"key 'mode': must be one of {_MODES}")

    cfg = RunConfig(mode=mode)
    cfg.output_path = pairs.get("output")
    cfg.seed = _get_int(pairs, "seed", 20240809)
    cfg.tolerance_scale = _get_float(pairs, "verify.tolerance_scale", 1.0)
    if "quad_order" in pairs:
        cfg.quad_order = _get_int(pairs, "quad_order")

    if mode in ("solve", "sweep", "infsup"):
        cfg.problem = _parse_problem(pairs)
    if mode in ("solve", "sweep"):
        cfg.case = _parse_case(pairs)
    if mode == "sweep":
        axis = pairs.get("sweep.axis", "").strip().lower()
        if axis not in ("temporal", "spatial"):
            raise ConfigError("key 'sweep.axis': must be 'temporal' or 'spatial'")
        cfg.sweep_axis = SweepAxis.TEMPORAL if axis == "temporal" else SweepAxis.SPATIAL
        cfg.sweep_orders = _parse_int_list(pairs, "sweep.orders")
        cfg.sweep_fixed_order = _get_int(pairs, "sweep.fixed_order")
    if mode == "solve":
        cfg.solve_n_time = _get_int(pairs, "solve.n_time")
        m = _parse_int_list(pairs, "solve.m_space") if "," in pairs.get("solve.m_space", "") \
            else [_get_int(pairs, "solve.m_space")]
        cfg.solve_m_space = tuple(m)
    if mode == "infsup":
        cfg.infsup_orders = _parse_int_list(pairs, "infsup.orders")
    return cfg


def _atomic_write_csv(path: str, header, rows):
    directory = os.path.dirname(os.path.abspath(path)) or "."
    fd, tmp = tempfile.mkstemp(prefix=".fracpg-", suffix=".csv", dir=directory)
    try:
        with os.fdopen(fd, "w", newline="", encoding="utf-8") as fh:
            writer = csv.writer(fh, lineterminator="\n")
            writer.writerow(header)
            writer.writerows(rows)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


def _fmt(x) -> str:
    return "%.12e" % float(x)


def _print_table(header, rows, out=sys.stdout):
    widths = [max(len(str(h)), *(len(str(r[i])) for r in rows)) if rows else len(str(h))
              for i, h in enumerate(header)]
    line = "  ".join(str(h).rjust(w) for h, w in zip(header, widths))
    print(line, file=out)
    print("-" * len(line), file=out)
    for r in rows:
        print("  ".join(str(c).rjust(w) for c, w in zip(r, widths)), file=out)


def verify_suite(seed: int = 20240809, tolerance_profile: float = 1.0):
    """Run the operator-identity/structural checks; returns CheckResult list."""
    return run_all_checks(seed=seed, tolerance_scale=tolerance_profile)


def _run_sweep(cfg: RunConfig) -> tuple:
    rec = convergence_sweep(
        cfg.problem, cfg.case, cfg.sweep_axis, cfg.sweep_orders,
        cfg.sweep_fixed_order, cfg.quad_order,
    )
    header = ["order", "l2_error", "energy_error", "rate_l2_tail", "rate_energy_tail",
              "wall_time_ms"]
    rows = []
    for i, order in enumerate(rec.orders_swept):
        rows.append([
            order,
            _fmt(rec.l2_errors[i]),
            _fmt(rec.energy_errors[i]),
            _fmt(rec.observed_rate_l2) if rec.observed_rate_l2 is not None else "nan",
            _fmt(rec.observed_rate_energy) if rec.observed_rate_energy is not None else "nan",
            _fmt(rec.wall_times_ms[i]),
        ])
    return header, rows


def _run_solve(cfg: RunConfig) -> tuple:
    from .analysis import energy_error, l2_rel_error

    res = Resolution(n_time=cfg.solve_n_time, m_space=cfg.solve_m_space,
                     quad_order=cfg.quad_order)
    t0 = time.perf_counter()
    sol = solve_manufactured(cfg.problem, cfg.case, res)
    elapsed = (time.perf_counter() - t0) * 1e3
    l2 = l2_rel_error(sol, cfg.case, cfg.quad_order)
    en = energy_error(sol, cfg.case, cfg.quad_order) if cfg.problem.d == 1 else float("nan")
    header = ["n_time", "m_space", "l2_error", "energy_error", "wall_time_ms"]
    rows = [[res.n_time, "x".join(map(str, res.m_space)), _fmt(l2), _fmt(en), _fmt(elapsed)]]
    return header, rows


def _run_infsup(cfg: RunConfig) -> tuple:
    header = ["order", "beta"]
    rows = []
    for o in cfg.infsup_orders:
        res = Resolution(n_time=o, m_space=(o,) * cfg.problem.d, quad_order=cfg.quad_order)
        beta = discrete_inf_sup(cfg.problem, res)
        rows.append([o, _fmt(beta)])
    return header, rows


def _run_verify(cfg: RunConfig) -> tuple:
    results = verify_suite(cfg.seed, cfg.tolerance_scale)
    header = ["check", "max_deviation", "tolerance", "status"]
    rows = [[r.name, _fmt(r.max_deviation), _fmt(r.tolerance),
             "pass" if r.passed else "FAIL"] for r in results]
    return header, rows


def run_config(path: str, mode: Optional[str] = None, out: Optional[str] = None,
               quad_order: Optional[int] = None, seed: Optional[int] = None) -> int:
    """Execute a configuration file; returns the process exit status."""
    try:
        cfg = parse_config(path, mode)
    except (OSError, ConfigError) as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return 1
    if out is not None:
        cfg.output_path = out
    if quad_order is not None:
        cfg.quad_order = quad_order
    if seed is not None:
        cfg.seed = seed

    try:
        if cfg.mode == "sweep":
            header, rows = _run_sweep(cfg)
        elif cfg.mode == "solve":
            header, rows = _run_solve(cfg)
        elif cfg.mode == "infsup":
            header, rows = _run_infsup(cfg)
        else:
            header, rows = _run_verify(cfg)
    except (SingularMatrixError, RuntimeError, FloatingPointError, ZeroDivisionError) as exc:
        print(f"numerical failure: {exc}", file=sys.stderr)
        return 2

    _print_table(header, rows)
    if cfg.output_path:
        _atomic_write_csv(cfg.output_path, header, rows)
        print(f"wrote {cfg.output_path}")
    if cfg.mode == "verify" and any(r[-1] == "FAIL" for r in rows):
        return 2
    return 0


def main(argv=None) -> int:
    parser = argparse.ArgumentParser(
        prog="fracpg",
        description="Petrov-Galerkin spectral solver for two-sided fractional PDEs",
    )
    sub = parser.add_subparsers(dest="command", required=True)
    for name in _MODES:
        p = sub.add_parser(name, help=f"run a '{name}' configuration")
        p.add_argument("--config", required=True, help="path to the run configuration")
        p.add_argument("--out", default=None, help="CSV output path (overrides config)")
        p.add_argument("--quad-order", type=int, default=None, help="quadrature order override")
        p.add_argument("--seed", type=int, default=None, help="seed for randomized checks")
    args = parser.parse_args(argv)
    return run_config(args.config, mode=args.command, out=args.out,
                      quad_order=args.quad_order, seed=args.seed)


if __name__ == "__main__":
    sys.exit(main())
