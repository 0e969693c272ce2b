"""Command-line interface.

Subcommands: solve-lpm, check-nc, solve-md, sweep-md, metrics. Single runs
emit JSON (sorted keys, config and version embedded, so identical config
and seed give bit-identical files); sweeps emit an aggregate CSV, plus
optional per-cell JSON. Sweep ranges use start:stop:step, inclusive of
stop. NCMD_WORKERS sets the sweep worker-pool size; NCMD_BACKEND selects
the solver kernel.
"""

from __future__ import annotations

import argparse
import csv
import json
import math
import os
import sys

import numpy as np

from . import __version__
from .embeddings import load_embeddings, class_stats
from .losses import LossParams, bilinear_term, bilinear_lower_bound
from .lpm import SolverOptions, closed_form_minimizer, construct_nc_config, solve_lpm, verify_theorem1
from .md import make_md_problem, md_memorization, r_max, solve_r, compare_ce_ls
from .metrics import covariances, memorization_terms, nc1_metric, nc_config_report


def _jsonsafe(x):
    if isinstance(x, dict):
        return {k: _jsonsafe(v) for k, v in x.items()}
    if isinstance(x, (list, tuple)):
        return [_jsonsafe(v) for v in x]
    if isinstance(x, np.ndarray):
        return [_jsonsafe(v) for v in x.tolist()]
    if isinstance(x, (np.floating, float)):
        x = float(x)
        return x if math.isfinite(x) else repr(x)
    if isinstance(x, (np.integer,)):
        return int(x)
    if isinstance(x, (np.bool_,)):
        return bool(x)
    return x


def _emit_json(doc: dict, out: str | None) -> None:
    text = json.dumps(_jsonsafe(doc), indent=2, sort_keys=True) + "\n"
    if out:
        with open(out, "w") as fh:
            fh.write(text)
    else:
        sys.stdout.write(text)


def _doc(command: str, config: dict, result) -> dict:
    return {"command": command, "version": __version__, "config": config, "result": result}


def _parse_range(spec: str) -> list[float]:
    """Either a single value or start:stop:step inclusive of stop."""
    parts = spec.split(":")
    if len(parts) == 1:
        return [float(parts[0])]
    if len(parts) != 3:
        raise ValueError(f"range must be VALUE or START:STOP:STEP, got {spec!r}")
    start, stop, step = (float(p) for p in parts)
    if step <= 0.0 or stop < start:
        raise ValueError(f"bad range {spec!r}")
    n = int(math.floor((stop - start) / step + 1e-9)) + 1
    return [start + k * step for k in range(n)]


def _fmt(x) -> str:
    if isinstance(x, bool):
        return "true" if x else "false"
    if isinstance(x, float):
        return repr(x)
    return str(x)


def _cmd_solve_lpm(args) -> int:
    lp = LossParams(alpha=args.alpha, lambda_w=args.lw, lambda_h=args.lh)
    opts = SolverOptions(max_iter=args.max_iter, tol_grad=args.tol_grad, tol_obj=args.tol_obj,
                         restarts=args.restarts, seed=args.seed,
                         backend=None if args.backend == "auto" else args.backend)
    sol = solve_lpm(args.n, args.k, args.m, lp, opts)
    cf = closed_form_minimizer(args.n, args.k, lp, strict=False)
    result = {
        "backend": sol.backend,
        "objective": sol.objective,
        "grad_norm": sol.grad_norm,
        "iterations": sol.iterations,
        "converged": sol.converged,
        "restarts_used": sol.restarts_used,
        "w_norm": float(np.linalg.norm(sol.params.W)),
        "h_norm": float(np.linalg.norm(sol.params.H)),
        "closed_form": {
            "beta": cf.beta, "t0": cf.t0, "q": cf.q, "rho": cf.rho,
            "w_norm": cf.w_norm, "h_norm": cf.h_norm,
            "objective_at_min": cf.objective_at_min, "condition_ok": cf.condition_ok,
        },
        "nc_report": nc_config_report(sol.params).as_dict(),
    }
    if cf.condition_ok:
        result["verify"] = verify_theorem1(sol, cf, tol_geom=args.tol_geom, tol_norm=args.tol_norm)
        ok = result["verify"]["ok"]
    else:
        # no geometry at the trivial minimizer; gate on the objective alone
        err = abs(sol.objective - cf.objective_at_min)
        result["degenerate_objective_abs_err"] = err
        ok = err <= 1e-8
    config = {"n": args.n, "k": args.k, "m": args.m, "alpha": args.alpha, "lw": args.lw,
              "lh": args.lh, "restarts": args.restarts, "seed": args.seed,
              "max_iter": args.max_iter, "tol_grad": args.tol_grad, "tol_obj": args.tol_obj,
              "tol_geom": args.tol_geom, "tol_norm": args.tol_norm, "backend": args.backend}
    _emit_json(_doc("solve-lpm", config, result), args.out)
    return 0 if (ok or not args.strict) else 1


def _cmd_check_nc(args) -> int:
    config = {"n": args.n, "k": args.k, "m": args.m, "alpha": args.alpha, "lw": args.lw,
              "lh": args.lh, "w_norm": args.w_norm, "h_norm": args.h_norm, "tol": args.tol}
    if args.w_norm is not None and args.h_norm is not None:
        w_norm, h_norm = args.w_norm, args.h_norm
        cf_doc = None
    else:
        lp = LossParams(alpha=args.alpha, lambda_w=args.lw, lambda_h=args.lh)
        cf = closed_form_minimizer(args.n, args.k, lp)
        w_norm, h_norm = cf.w_norm, cf.h_norm
        cf_doc = {"beta": cf.beta, "t0": cf.t0, "q": cf.q, "rho": cf.rho, "w_norm": cf.w_norm,
                  "h_norm": cf.h_norm, "objective_at_min": cf.objective_at_min,
                  "condition_ok": cf.condition_ok}
    params = construct_nc_config(args.n, args.k, args.m, w_norm, h_norm)
    report = nc_config_report(params)
    P = bilinear_term(params)
    bound = bilinear_lower_bound(params)
    result = {
        "nc_report": report.as_dict(),
        "bilinear": P,
        "bilinear_bound": bound,
        "bilinear_equality_abs_err": abs(P - bound),
        "row_sum_norm": float(np.linalg.norm(params.W.sum(axis=0))),
        "closed_form": cf_doc,
    }
    _emit_json(_doc("check-nc", config, result), args.out)
    ok = report.max_deviation() <= args.tol and abs(P - bound) <= args.tol
    return 0 if (ok or not args.strict) else 1


def _cmd_solve_md(args) -> int:
    lp = LossParams(alpha=args.alpha, lambda_w=args.lam, lambda_h=args.lam)
    p = make_md_problem(lp, args.eta, args.c_md, m=args.m, noise_dist=args.dist,
                        quad_points=args.quad_points)
    sol = solve_r(p, grid_points=args.grid_points)
    result = {
        "r_star": sol.r_star,
        "r_max": r_max(p),
        "normalized_dilation": sol.normalized_dilation,
        "memorization": md_memorization(p, sol),
        "risk": sol.risk,
        "constraint_active": list(sol.constraint_active),
        "w_norm": float(np.linalg.norm(p.nc.W)),
        "h_norm": float(np.linalg.norm(p.nc.H)),
        "u1": sol.u1,
        "u2": sol.u2,
    }
    config = {"eta": args.eta, "alpha": args.alpha, "lam": args.lam, "c_md": args.c_md,
              "m": args.m, "dist": args.dist, "quad_points": args.quad_points,
              "grid_points": args.grid_points}
    _emit_json(_doc("solve-md", config, result), args.out)
    return 0


SWEEP_COLUMNS = ["eta", "alpha", "lambda", "c_md", "gamma", "r_star", "r_max",
                 "normalized_dilation", "memorization", "assumption_ok", "theorem2_holds"]


def _sweep_cell(cell: tuple) -> list[dict]:
    eta, alpha0, lam, c_md, dist, quad_points, grid_points = cell
    lp_ce = LossParams(alpha=0.0, lambda_w=lam, lambda_h=lam)
    lp_ls = LossParams(alpha=alpha0, lambda_w=lam, lambda_h=lam) if alpha0 > 0 else lp_ce
    report, sol_ce, sol_ls, t2 = compare_ce_ls(lp_ce, lp_ls, eta, c_md, dist=dist,
                                               quad_points=quad_points, grid_points=grid_points)
    assumption_ok = report.alpha_condition and report.eta_condition
    rows = []
    for alpha_val, lp, sol in ((0.0, lp_ce, sol_ce), (alpha0, lp_ls, sol_ls)):
        p = make_md_problem(lp, eta, c_md, noise_dist=dist, quad_points=quad_points)
        rows.append({
            "eta": eta, "alpha": alpha_val, "lambda": lam, "c_md": c_md,
            "gamma": report.gamma, "r_star": sol.r_star, "r_max": r_max(p),
            "normalized_dilation": sol.normalized_dilation,
            "memorization": md_memorization(p, sol),
            "assumption_ok": assumption_ok, "theorem2_holds": t2,
        })
    return rows


def _cmd_sweep_md(args) -> int:
    cells = [
        (eta, alpha0, lam, c_md, args.dist, args.quad_points, args.grid_points)
        for eta in _parse_range(args.eta)
        for alpha0 in _parse_range(args.alpha0)
        for lam in _parse_range(args.lam)
        for c_md in _parse_range(args.c_md)
    ]
    workers = int(os.environ.get("NCMD_WORKERS", "1"))
    if workers > 1:
        import multiprocessing

        with multiprocessing.Pool(workers) as pool:
            per_cell = pool.map(_sweep_cell, cells)
    else:
        per_cell = [_sweep_cell(c) for c in cells]

    rows = [row for rows_ in per_cell for row in rows_]
    lines = [",".join(SWEEP_COLUMNS)]
    lines += [",".join(_fmt(row[c]) for c in SWEEP_COLUMNS) for row in rows]
    text = "\n".join(lines) + "\n"
    if args.out:
        with open(args.out, "w") as fh:
            fh.write(text)
    else:
        sys.stdout.write(text)

    if args.json_dir:
        os.makedirs(args.json_dir, exist_ok=True)
        config = {"eta": args.eta, "alpha0": args.alpha0, "lam": args.lam, "c_md": args.c_md,
                  "dist": args.dist, "quad_points": args.quad_points,
                  "grid_points": args.grid_points}
        for i, (cell, cell_rows) in enumerate(zip(cells, per_cell)):
            doc = _doc("sweep-md", {**config, "cell": list(cell[:4])}, {"rows": cell_rows})
            _emit_json(doc, os.path.join(args.json_dir, f"cell_{i:04d}.json"))

    if args.strict and any(not r["theorem2_holds"] for r in rows if r["assumption_ok"]):
        return 1
    return 0


def _cmd_metrics(args) -> int:
    emb = load_embeddings(args.features)
    sw, _ = covariances(emb, split=args.split, label_source=args.label_source)
    result = {
        "nc1": nc1_metric(emb, split=args.split, label_source=args.label_source),
        "variability_collapse": float(np.trace(sw)),
        "n_samples": int(emb.n_samples),
        "n_train": int((emb.split == "train").sum()),
        "n_test": int((emb.split == "test").sum()),
        "n_corrupted": int(((emb.split == "train") & emb.corrupted).sum()),
    }
    warnings = []
    try:
        test_stats = class_stats(emb, "test", "true")
        terms = memorization_terms(emb, test_stats)
        result["memorization"] = float(terms.sum())
        result["memorization_per_corrupted"] = float(terms.mean()) if terms.size else 0.0
        if args.per_sample:
            sel = np.flatnonzero((emb.split == "train") & emb.corrupted)
            with open(args.per_sample, "w", newline="") as fh:
                writer = csv.writer(fh)
                writer.writerow(["index", "true_label", "observed_label", "distance"])
                for idx, dist in zip(sel, terms):
                    writer.writerow([int(idx), int(emb.true_label[idx]),
                                     int(emb.observed_label[idx]), repr(float(dist))])
    except ValueError as exc:
        if args.strict:
            raise
        warnings.append(str(exc))
        result["memorization"] = None
        result["memorization_per_corrupted"] = None
    if warnings:
        result["warnings"] = warnings
    config = {"features": args.features, "split": args.split,
              "label_source": args.label_source, "per_sample": args.per_sample}
    _emit_json(_doc("metrics", config, result), args.out)
    return 0


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="ncmd", description=__doc__,
                                 formatter_class=argparse.RawDescriptionHelpFormatter)
    ap.add_argument("--version", action="version", version=f"ncmd {__version__}")
    sub = ap.add_subparsers(dest="command", required=True)

    sp = sub.add_parser("solve-lpm", help="solve the layer-peeled problem and compare to the closed form")
    sp.add_argument("--n", type=int, required=True)
    sp.add_argument("--k", type=int, default=1)
    sp.add_argument("--m", type=int, default=None, help="feature dimension, default N")
    sp.add_argument("--alpha", type=float, default=0.0)
    sp.add_argument("--lw", type=float, required=True)
    sp.add_argument("--lh", type=float, required=True)
    sp.add_argument("--restarts", type=int, default=5)
    sp.add_argument("--seed", type=int, default=0)
    sp.add_argument("--max-iter", type=int, default=100_000)
    sp.add_argument("--tol-grad", type=float, default=1e-8)
    sp.add_argument("--tol-obj", type=float, default=1e-12)
    sp.add_argument("--tol-geom", type=float, default=1e-3)
    sp.add_argument("--tol-norm", type=float, default=1e-2)
    sp.add_argument("--backend", choices=["auto", "numba", "numpy"], default="auto")
    sp.add_argument("--out", default=None)
    sp.add_argument("--strict", action="store_true")
    sp.set_defaults(fn=_cmd_solve_lpm)

    sp = sub.add_parser("check-nc", help="build a collapsed configuration and report its residuals")
    sp.add_argument("--n", type=int, required=True)
    sp.add_argument("--k", type=int, default=1)
    sp.add_argument("--m", type=int, default=None)
    sp.add_argument("--alpha", type=float, default=0.0)
    sp.add_argument("--lw", type=float, default=2.5e-3)
    sp.add_argument("--lh", type=float, default=2.5e-3)
    sp.add_argument("--w-norm", type=float, default=None, help="override the closed-form |W|")
    sp.add_argument("--h-norm", type=float, default=None, help="override the closed-form |H|")
    sp.add_argument("--tol", type=float, default=1e-9)
    sp.add_argument("--out", default=None)
    sp.add_argument("--strict", action="store_true")
    sp.set_defaults(fn=_cmd_check_nc)

    sp = sub.add_parser("solve-md", help="solve one memorization-dilation instance")
    sp.add_argument("--eta", type=float, required=True)
    sp.add_argument("--alpha", type=float, default=0.0)
    sp.add_argument("--lam", type=float, required=True)
    sp.add_argument("--c-md", type=float, default=1.0)
    sp.add_argument("--m", type=int, default=2)
    sp.add_argument("--dist", choices=["two-point", "circle"], default="two-point")
    sp.add_argument("--quad-points", type=int, default=64)
    sp.add_argument("--grid-points", type=int, default=256)
    sp.add_argument("--out", default=None)
    sp.set_defaults(fn=_cmd_solve_md)

    sp = sub.add_parser("sweep-md", help="grid sweep of CE-vs-smoothed dilation comparisons")
    sp.add_argument("--eta", required=True, help="value or start:stop:step")
    sp.add_argument("--alpha0", default="0.1", help="value or start:stop:step")
    sp.add_argument("--lam", default="2.5e-4", help="value or start:stop:step")
    sp.add_argument("--c-md", default="1.0", help="value or start:stop:step")
    sp.add_argument("--dist", choices=["two-point", "circle"], default="two-point")
    sp.add_argument("--quad-points", type=int, default=64)
    sp.add_argument("--grid-points", type=int, default=256)
    sp.add_argument("--out", default=None, help="aggregate CSV path (default stdout)")
    sp.add_argument("--json-dir", default=None, help="also write one JSON file per grid cell")
    sp.add_argument("--strict", action="store_true",
                    help="exit 1 if any assumption-satisfying cell fails the comparison")
    sp.set_defaults(fn=_cmd_sweep_md)

    sp = sub.add_parser("metrics", help="collapse metrics of a feature CSV")
    sp.add_argument("--features", required=True)
    sp.add_argument("--split", choices=["train", "test"], default="train")
    sp.add_argument("--label-source", choices=["true", "observed"], default="true")
    sp.add_argument("--per-sample", default=None, help="write per-corrupted-sample distances CSV here")
    sp.add_argument("--out", default=None)
    sp.add_argument("--strict", action="store_true")
    sp.set_defaults(fn=_cmd_metrics)
    return ap


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    if getattr(args, "m", None) is None and hasattr(args, "n"):
        args.m = args.n
    try:
        return args.fn(args)
    except (ValueError, OSError) as exc:
        print(f"ncmd: error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
