"""Batch command line: JSON parameters in, JSON reports and CSV files out.

Exit status: 0 success, 2 usage error, 3 numerical failure.
"""
from __future__ import annotations

import argparse
import csv
import json
import math
import os
import sys
from concurrent.futures import ProcessPoolExecutor
from pathlib import Path

import numpy as np
import scipy

from .errors import DomainError, NoSolution, ShotFailed, Stagnation, UnsupportedCaseError, WSobolevError

EXIT_OK = 0
EXIT_USAGE = 2
EXIT_NUMERIC = 3

# Default tolerances for every command; override with a "tolerances" object in --params.
DEFAULT_TOLERANCES = {
    "constant_rel": 1e-5,        # closed form vs extrapolated quadrature
    "grushin_rel": 1e-4,         # closed-form Grushin constant vs quadrature
    "bvp_residual": 1e-8,        # boundary functional accepted by the shooting solver
    "bvp_xtol": 1e-12,           # bisection tolerance on psi(0)
    "flow_tol": 1e-9,            # relative change of F over the flow window
    "bridge_rel": 1e-3,          # functional identity between G and F
    "chain_slack": 1e-3,         # G-chain slack relative to G[u]
    "moving_sphere": 1e-10,      # reflection identity for extremals
    "residual_spread": 1e-6,     # spread of the PDE ratio
}


class UsageError(WSobolevError):
    pass


def _fmt(x):
    if isinstance(x, (float, np.floating)):
        return format(float(x), ".17g")
    return x


def write_csv(path: Path, header, rows):
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        if header:
            w.writerow(header)
        for row in rows:
            w.writerow([_fmt(v) for v in row])


def _jsonable(obj):
    if isinstance(obj, dict):
        return {str(k): _jsonable(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_jsonable(v) for v in obj]
    if isinstance(obj, (np.floating, float)):
        v = float(obj)
        return v if math.isfinite(v) else str(v)
    if isinstance(obj, np.integer):
        return int(obj)
    if isinstance(obj, np.bool_):
        return bool(obj)
    return obj


def load_params(text: str | None) -> dict:
    """--params accepts a path to a JSON file or an inline JSON object."""
    if text is None:
        raise UsageError("--params is required")
    if os.path.isfile(text):
        with open(text) as fh:
            text = fh.read()
    try:
        obj = json.loads(text)
    except json.JSONDecodeError as exc:
        raise UsageError(f"malformed JSON: {exc}") from None
    if not isinstance(obj, dict):
        raise UsageError("parameters must be a JSON object")
    return obj


def _weight_pair(params):
    from .params import WeightPair

    return WeightPair.from_json(params)


def _grushin_params(params):
    from .params import GrushinParams

    return GrushinParams.from_json(params)


def _is_grushin(params) -> bool:
    return "m" in params or "tau" in params


def _get(params, key, default, kind=float):
    v = params.get(key, default)
    if isinstance(v, bool) or not isinstance(v, (int, float)):
        raise UsageError(f"{key} must be a number")
    return kind(v)


# ---------------------------------------------------------------- commands

def cmd_constants(params, tol, out, seed):
    from .extremals import ExtremalSpec
    from .grushin import grushin_extremal_field
    from .params import constant_conversion, grushin_to_weight
    from .quadrature import rayleigh_F_extrapolated, rayleigh_G_report
    from .special import grushin_sharp_constant_tau1, sharp_constant_case1, sharp_constant_case2

    if _is_grushin(params):
        gp = _grushin_params(params)
        if float(gp.tau) != 1.0:
            raise UnsupportedCaseError("closed-form Grushin constants need tau = 1")
        closed = grushin_sharp_constant_tau1(gp.n, gp.m)
        wp = grushin_to_weight(gp)
        via_weight = constant_conversion(gp, float(sharp_constant_case1(gp.n, float(wp.alpha))))
        quad = rayleigh_G_report(grushin_extremal_field(gp), gp)
        rel = abs(quad.value - closed.value) / closed.value
        return {"params": gp.to_json(), "formula": closed.formula_id.value, "value": closed.value,
                "conversion_value": via_weight,
                "conversion_rel_diff": abs(via_weight - closed.value) / closed.value,
                "quadrature": quad.to_json(), "rel_diff": rel, "within_tol": rel < tol["grushin_rel"]}
    wp = _weight_pair(params)
    if wp.is_case1():
        closed = sharp_constant_case1(wp.n, wp.a)
    elif wp.is_case2():
        closed = sharp_constant_case2(wp.n, wp.a)
    else:
        from .ode import solve_bvp

        res = solve_bvp(wp)
        quad = rayleigh_F_extrapolated(ExtremalSpec(wp, profile=res.profile).evaluator(), wp)
        return {"params": wp.to_json(), "formula": None, "value": None,
                "profile_quadrature": quad.to_json(), "ode": res.report()}
    quad = rayleigh_F_extrapolated(ExtremalSpec(wp).evaluator(), wp)
    rel = abs(quad.value - closed.value) / closed.value
    return {"params": wp.to_json(), "formula": closed.formula_id.value, "value": closed.value,
            "quadrature": quad.to_json(), "rel_diff": rel, "within_tol": rel < tol["constant_rel"]}


def cmd_ode(params, tol, out, seed):
    from .ode import solve_bvp

    wp = _weight_pair(params)
    try:
        res = solve_bvp(wp, residual_tol=tol["bvp_residual"], xtol=tol["bvp_xtol"])
    except NoSolution as exc:
        return {"params": wp.to_json(), "status": "no-solution", "detail": str(exc)}, EXIT_NUMERIC
    report = {"status": "ok", **res.report()}
    if out is not None:
        write_csv(out / "profile.csv", ["r", "psi", "dpsi"], res.profile.to_csv_rows())
        report["outputs"] = ["profile.csv"]
    return report


def cmd_minimize(params, tol, out, seed):
    from .minimize import MinimizeConfig, minimize_constant
    from .special import sharp_constant_case1, sharp_constant_case2

    wp = _weight_pair(params)
    cfg = MinimizeConfig(n_nodes=_get(params, "res", 256, int), R=_get(params, "R", 1e4),
                         T=_get(params, "T", 1e4), core=_get(params, "core", 0.02),
                         max_iters=_get(params, "max_iters", 5000, int), tol=tol["flow_tol"],
                         domain_check=bool(params.get("domain_check", True)))
    res = minimize_constant(wp, cfg)
    report = {"status": "stagnation" if "stagnation" in res.flags else "ok", **res.report()}
    closed = None
    if wp.is_case1():
        closed = sharp_constant_case1(wp.n, wp.a).value
    elif wp.is_case2():
        closed = sharp_constant_case2(wp.n, wp.a).value
    if closed is not None:
        report["closed_form"] = closed
        report["rel_diff"] = abs(res.S_estimate - closed) / closed
    if out is not None:
        write_csv(out / "trace.csv", ["step", "F", "lr"], res.state.trace_rows())
        write_csv(out / "field.csv", ["rho", "t", "u"], res.field.to_csv_rows())
        report["outputs"] = ["trace.csv", "field.csv"]
    if "stagnation" in res.flags:
        return report, EXIT_NUMERIC
    return report


def cmd_rearrange(params, tol, out, seed):
    from .rearrange import random_bump, rearrangement_chain

    gp = _grushin_params(params)
    res = _get(params, "res", 65, int)
    extent = _get(params, "extent", 4.0)
    samples = _get(params, "samples", 1, int)
    rng = np.random.default_rng(seed)
    runs = []
    for _ in range(samples):
        u = random_bump(rng, (gp.n, gp.m), extent, res)
        chain = rearrangement_chain(u, gp)
        runs.append(chain.to_json())
    worst = max(r["violation"] for r in runs)
    report = {"params": gp.to_json(), "res": res, "extent": extent, "seed": seed,
              "chains": runs, "max_violation": worst,
              "within_tol": worst <= tol["chain_slack"]}
    if out is not None and samples == 1:
        from .rearrange import fourier_rearrange

        w = fourier_rearrange(random_bump(np.random.default_rng(seed), (gp.n, gp.m), extent, res), gp)
        rows = w.to_csv_rows()
        write_csv(out / "w.csv", rows[0], rows[1:])
        report["outputs"] = ["w.csv"]
    return report


def cmd_grushin(params, tol, out, seed):
    from .grushin import lift_identities
    from .params import grushin_to_weight
    from .quadrature import functional_bridge_check

    gp = _grushin_params(params)
    wp = grushin_to_weight(gp)
    if float(gp.tau) == 1.0:
        from .grushin import halfspace_case1

        u_half, label, extent = halfspace_case1(gp), "bubble", 1e14
    else:
        def u_half(y, t):
            return np.exp(-np.sum(np.asarray(y) ** 2, axis=-1) - np.asarray(t) ** 2)
        label, extent = "gaussian", 30.0
    dev = functional_bridge_check(u_half, gp, extent=extent)
    ident = lift_identities(u_half, gp, extent=extent)
    return {"params": gp.to_json(), "weight_pair": {"n": wp.n, "alpha": float(wp.alpha),
                                                     "beta": float(wp.beta)},
            "field": label, "bridge_deviation": dev, "within_tol": dev < tol["bridge_rel"],
            "identities": ident.to_json()}


def cmd_residual(params, tol, out, seed):
    from .extremals import ExtremalSpec, field_rows, neumann_trend, pde_residual_ratio, raw_constant

    wp = _weight_pair(params)
    spec = ExtremalSpec(wp)
    u = spec.evaluator()
    cells = _get(params, "cells", 400, int)
    mean, spread = pde_residual_ratio(u, wp, n_cells=cells)
    report = {"params": wp.to_json(), "case": spec.case_id.name, "mean_ratio": mean,
              "spread": spread, "raw_constant": raw_constant(wp),
              "neumann_trend": neumann_trend(u, wp).tolist(),
              "within_tol": spread < tol["residual_spread"]}
    if out is not None:
        g = np.linspace(0.0, 2.0, 41)
        write_csv(out / "field.csv", ["rho", "t", "u"], field_rows(u, wp, g, g))
        report["outputs"] = ["field.csv"]
    return report


def cmd_moving_sphere(params, tol, out, seed):
    from .extremals import ExtremalSpec, moving_sphere_check, random_halfspace_points

    wp = _weight_pair(params)
    u = ExtremalSpec(wp).evaluator()
    rng = np.random.default_rng(seed)
    count = _get(params, "samples", 500, int)
    centres = params.get("b", [[0.0] * wp.n, [3.0] + [0.0] * (wp.n - 1), [-1.5] * wp.n])
    try:
        centres = [np.asarray(b, dtype=float).reshape(wp.n) for b in centres]
    except (TypeError, ValueError):
        raise UsageError(f"b must be a list of length-{wp.n} vectors") from None
    y, t = random_halfspace_points(rng, wp.n, count)
    devs = [moving_sphere_check(u, wp, b, y, t) for b in centres]
    return {"params": wp.to_json(), "centres": [b.tolist() for b in centres],
            "deviations": devs, "max_deviation": max(devs),
            "within_tol": max(devs) < tol["moving_sphere"]}


COMMANDS = {
    "constants": cmd_constants,
    "ode": cmd_ode,
    "minimize": cmd_minimize,
    "rearrange": cmd_rearrange,
    "grushin": cmd_grushin,
    "residual": cmd_residual,
    "moving-sphere": cmd_moving_sphere,
}


def _versions() -> dict:
    from . import __version__
    return {"wsobolev": __version__, "python": sys.version.split()[0],
            "numpy": np.__version__, "scipy": scipy.__version__}


def run_command(command: str, params: dict, out: Path | None, seed: int) -> tuple[dict, int]:
    """Run one command and return (report with manifest, exit status)."""
    params = dict(params)
    overrides = params.pop("tolerances", {}) or {}
    if not isinstance(overrides, dict) or any(k not in DEFAULT_TOLERANCES for k in overrides):
        return {"status": "usage-error", "error": "unknown tolerance override"}, EXIT_USAGE
    tol = {**DEFAULT_TOLERANCES, **overrides}
    if "seed" in params:
        seed = int(params.pop("seed"))
    if out is not None:
        out.mkdir(parents=True, exist_ok=True)
    manifest = {"command": command, "params": params, "seed": seed, "tolerances": tol,
                "out": str(out) if out is not None else None, "versions": _versions()}
    try:
        result = COMMANDS[command](params, tol, out, seed)
        code = EXIT_OK
        if isinstance(result, tuple):
            result, code = result
        result.setdefault("status", "ok")
    except (UsageError, DomainError, UnsupportedCaseError) as exc:
        kind = "unsupported" if isinstance(exc, UnsupportedCaseError) else "usage-error"
        result, code = {"status": kind, "error": str(exc), "error_type": type(exc).__name__}, EXIT_USAGE
    except (NoSolution, Stagnation, ShotFailed, WSobolevError) as exc:
        result, code = {"status": "numerical-failure", "error": str(exc),
                        "error_type": type(exc).__name__}, EXIT_NUMERIC
    except Exception as exc:  # never let a traceback escape a batch run
        result, code = {"status": "numerical-failure", "error": repr(exc),
                        "error_type": type(exc).__name__}, EXIT_NUMERIC
    result["manifest"] = manifest
    result = _jsonable(result)
    if out is not None:
        with open(out / "report.json", "w") as fh:
            json.dump(result, fh, indent=2)
    return result, code


def _sweep_worker(args):
    command, params, out, seed = args
    report, code = run_command(command, params, out, seed)
    return report, code


def run_sweep(command: str, sweep_file: str, out: Path | None, seed: int, workers: int | None = None):
    try:
        with open(sweep_file) as fh:
            runs = json.load(fh)
    except (OSError, json.JSONDecodeError) as exc:
        raise UsageError(f"cannot read sweep file: {exc}") from None
    if not isinstance(runs, list) or not all(isinstance(r, dict) for r in runs):
        raise UsageError("sweep file must hold a JSON list of parameter objects")
    jobs = [(command, r, (out / f"run_{i:03d}") if out is not None else None, seed)
            for i, r in enumerate(runs)]
    with ProcessPoolExecutor(max_workers=workers) as pool:
        results = list(pool.map(_sweep_worker, jobs))
    reports = [r for r, _ in results]
    code = max(c for _, c in results) if results else EXIT_OK
    return {"status": "ok" if code == EXIT_OK else "partial", "runs": reports}, code


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="wsobolev", description=__doc__.splitlines()[0])
    sub = ap.add_subparsers(dest="command", required=True)
    for name in COMMANDS:
        sp = sub.add_parser(name)
        sp.add_argument("--params", help="JSON file or inline JSON object")
        sp.add_argument("--out", type=Path, default=None, help="output directory")
        sp.add_argument("--seed", type=int, default=0)
        sp.add_argument("--sweep", default=None, help="JSON list of parameter objects")
        sp.add_argument("--workers", type=int, default=None)
    return ap


def main(argv=None) -> int:
    ap = build_parser()
    try:
        args = ap.parse_args(argv)
    except SystemExit as exc:
        return EXIT_USAGE if exc.code else EXIT_OK
    try:
        if args.sweep is not None:
            report, code = run_sweep(args.command, args.sweep, args.out, args.seed, args.workers)
        else:
            report, code = run_command(args.command, load_params(args.params), args.out, args.seed)
    except UsageError as exc:
        report, code = {"status": "usage-error", "error": str(exc)}, EXIT_USAGE
    json.dump(_jsonable(report), sys.stdout, indent=2)
    sys.stdout.write("\n")
    return code


if __name__ == "__main__":
    sys.exit(main())
