"""Command-line front end.

Commands::

    trajdist dist GT HYP --metric {ospa,motp,dnat,dcomp} --M M [...]
    trajdist tradeoff GT HYP --M M [--alphas A,B,... | --auto-grid N] [--out CSV]
    trajdist gen [--config JSON] [--AMPnoise ...] --out-prefix PREFIX
    trajdist verify [--suite {axioms,counterexamples,norm,all}]
    trajdist auc GT HYP --M M  |  trajdist auc --sweep KNOB --values ... --repeats N

Single results are JSON with sorted keys on stdout. Exit codes: 0 success,
1 verification failure, 2 input error, 3 solver non-convergence.
"""

from __future__ import annotations

import argparse
import csv
import hashlib
import io
import json
import math
import sys
import time
from pathlib import Path

import numpy as np

from trajdist import __version__
from trajdist.comp import CompParams, auc, auc_bounds, d_comp_from_matrices, default_alpha_grid
from trajdist.comp import motp_tradeoff_from_matrices, tradeoff_from_matrices
from trajdist.core import ExtendedMetricParams, distance_matrices, extend_pair, read_pair_csv, write_csv
from trajdist.errors import InstanceTooLargeError, InvalidInputError, TrajdistError
from trajdist.exact import d_nat_from_matrices, motp_from_matrices, ospa_from_matrices
from trajdist.permutations import KINDS, SwitchCost
from trajdist.synthgen import KNOBS, GenConfig, generate_pair, knob_sweep
from trajdist.verify import SUITES, run_suite

EXIT_OK, EXIT_VERIFY, EXIT_INPUT, EXIT_SOLVER = 0, 1, 2, 3


def _json_default(x):
    if isinstance(x, (np.floating, np.integer)):
        return x.item()
    if isinstance(x, np.ndarray):
        return x.tolist()
    raise TypeError(f"not serializable: {type(x).__name__}")


def _clean(x):
    # JSON has no infinities; encode them as strings
    if isinstance(x, dict):
        return {k: _clean(v) for k, v in x.items()}
    if isinstance(x, (list, tuple)):
        return [_clean(v) for v in x]
    if isinstance(x, (float, np.floating)) and not math.isfinite(x):
        return str(float(x))
    return x


def dumps(obj) -> str:
    """Deterministic JSON: sorted keys, fixed indentation."""
    return json.dumps(_clean(obj), sort_keys=True, indent=2, default=_json_default, allow_nan=False)


def _digest(path) -> str:
    return "sha256:" + hashlib.sha256(Path(path).read_bytes()).hexdigest()


def _floats(text: str) -> list[float]:
    try:
        return [float(v) for v in text.split(",") if v.strip()]
    except ValueError:
        raise InvalidInputError(f"expected comma-separated numbers, got {text!r}") from None


def _comp_params(args, alpha: float = 1.0) -> CompParams:
    return CompParams(
        alpha=alpha,
        norm=args.norm,
        tol=args.tol,
        max_iter=args.max_iter,
        sparsify_threshold=args.sparsify,
        backend=args.backend,
        trace=bool(getattr(args, "trace", None)),
    )


def _load(args):
    A, B = read_pair_csv(args.gt, args.hyp)
    params = ExtendedMetricParams(args.M)
    return A, B, params, distance_matrices(extend_pair(A, B), params)


# commands

def cmd_dist(args) -> int:
    A, B, params, D = _load(args)
    t0 = time.perf_counter()
    report = {
        "metric": args.metric,
        "inputs": {"ground_truth": _digest(args.gt), "hypothesis": _digest(args.hyp)},
        "parameters": {"M": params.M},
    }
    if args.metric == "ospa":
        res = ospa_from_matrices(D)
    elif args.metric == "motp":
        if args.thr is None:
            raise InvalidInputError("--metric motp needs --thr")
        report["parameters"]["thr"] = args.thr
        res = motp_from_matrices(D, args.thr)
    elif args.metric == "dnat":
        if args.K is None:
            raise InvalidInputError("--metric dnat needs --K")
        K = SwitchCost(args.K, 1.0 if args.alpha is None else args.alpha, args.beta)
        report["parameters"].update(K=K.kind, alpha=K.alpha)
        if K.beta is not None:
            report["parameters"]["beta"] = K.beta
        try:
            res = d_nat_from_matrices(D, K)
        except InstanceTooLargeError as exc:
            raise InstanceTooLargeError(f"{exc}; try --metric dcomp") from None
    else:
        if args.alpha is None:
            raise InvalidInputError("--metric dcomp needs --alpha")
        cp = _comp_params(args, args.alpha)
        report["parameters"].update(alpha=cp.alpha, norm=cp.norm, tol=cp.tol)
        res = d_comp_from_matrices(D, cp)
        report["solver"] = {k: res.info[k] for k in ("backend", "iterations", "lower_bound", "feasibility")}
        if args.trace:
            _write_trace(args.trace, res.info.get("trace", []))
    report.update(
        value=res.value,
        dist_term=res.dist_term,
        swi_term=res.swi_term,
        converged=bool(res.converged),
    )
    if res.association is not None:
        report["association"] = [list(s) for s in res.association.one_based()]
    if args.timing:
        report["wall_time_s"] = time.perf_counter() - t0
    print(dumps(report))
    return EXIT_OK if res.converged else EXIT_SOLVER


def _write_trace(path, rows) -> None:
    with open(path, "w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["iter", "objective", "primal_residual", "dual_residual"])
        for it, obj, pr, du in rows:
            w.writerow([it, repr(obj), repr(pr), repr(du)])


def _curve_csv(curve) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow([curve.param_name, "dist", "swi", "on_hull"])
    for a, d, s, h in zip(curve.param, curve.dist, curve.swi, curve.on_hull):
        w.writerow([repr(float(a)), repr(float(d)), repr(float(s)), int(h)])
    return buf.getvalue()


def _alpha_grid(args, D):
    if args.alphas is not None:
        return _floats(args.alphas)
    return default_alpha_grid(D, args.auto_grid)


def cmd_tradeoff(args) -> int:
    A, B, params, D = _load(args)
    cp = _comp_params(args)
    curve = tradeoff_from_matrices(D, _alpha_grid(args, D), cp, refine=args.refine).unique()
    text = _curve_csv(curve)
    if args.out:
        Path(args.out).write_text(text, encoding="utf-8")
    else:
        sys.stdout.write(text)
    md, ms = auc_bounds(A, B, params, cp.norm)
    value = auc(curve, md, ms) if md > 0 and ms > 0 else 0.0
    print(f"# auc={value!r}", file=sys.stderr if not args.out else sys.stdout)
    for a in curve.failed:
        print(f"# alpha={a!r}: solver failed", file=sys.stderr)
    return EXIT_OK if bool(np.all(curve.converged)) else EXIT_SOLVER


def cmd_auc(args) -> int:
    cp = _comp_params(args)
    if args.sweep is not None:
        if args.values is None:
            raise InvalidInputError("--sweep needs --values")
        base = GenConfig(n_traj=args.n_traj, t_horizon=args.T, seed=args.seed)
        sweep_cp = None if args.solver_defaults else cp
        points = knob_sweep(base, args.sweep, _floats(args.values), args.repeats,
                            ExtendedMetricParams(args.M), sweep_cp)
        rows = [
            {
                "value": p.value,
                "auc_dcomp": p.mean_comp,
                "auc_dcomp_se": p.se_comp,
                "auc_motp": p.mean_motp,
                "auc_motp_se": p.se_motp,
                "unconverged_solves": p.n_unconverged,
            }
            for p in points
        ]
        print(dumps({"knob": args.sweep, "base": json.loads(base.to_json()), "M": args.M,
                     "repeats": args.repeats, "points": rows}))
        return EXIT_OK
    if args.gt is None or args.hyp is None:
        raise InvalidInputError("give GT and HYP files, or --sweep")
    A, B, params, D = _load(args)
    md, ms = auc_bounds(A, B, params, cp.norm)
    curve = tradeoff_from_matrices(D, _alpha_grid(args, D), cp, refine=args.refine)
    mcurve = motp_tradeoff_from_matrices(D, norm=cp.norm)
    ok = md > 0 and ms > 0
    report = {
        "inputs": {"ground_truth": _digest(args.gt), "hypothesis": _digest(args.hyp)},
        "parameters": {"M": params.M, "norm": cp.norm, "tol": cp.tol},
        "max_dist": md,
        "max_swi": ms,
        "auc_dcomp": auc(curve, md, ms) if ok else 0.0,
        "auc_motp": auc(mcurve, md, ms) if ok else 0.0,
        "converged": bool(np.all(curve.converged)),
    }
    print(dumps(report))
    return EXIT_OK if report["converged"] else EXIT_SOLVER


def cmd_gen(args) -> int:
    cfg = {}
    if args.config:
        try:
            cfg = json.loads(Path(args.config).read_text(encoding="utf-8"))
        except (OSError, json.JSONDecodeError) as exc:
            raise InvalidInputError(f"cannot read config {args.config}: {exc}") from None
        if not isinstance(cfg, dict):
            raise InvalidInputError("config must be a JSON object")
    for name in ("n_traj", "t_horizon", "state_dim", "seed", *KNOBS, "DROPfrag", "swap_prob", "turn_prob", "box"):
        v = getattr(args, name)
        if v is not None:
            cfg[name] = v
    if "seed" not in cfg:
        # synthesize a seed and echo it so the run can be repeated
        cfg["seed"] = int(np.random.SeedSequence().entropy % 2**63)
    conf = GenConfig.from_dict(cfg)
    A, B = generate_pair(conf)
    prefix = args.out_prefix
    # 17 significant digits round-trip every double
    write_csv(A, f"{prefix}_A.csv", precision=17)
    write_csv(B, f"{prefix}_B.csv", precision=17)
    Path(f"{prefix}_config.json").write_text(conf.to_json() + "\n", encoding="utf-8")
    print(dumps({"config": json.loads(conf.to_json()), "files": [f"{prefix}_A.csv", f"{prefix}_B.csv"],
                 "tracks": {"A": len(A), "B": len(B)}}))
    return EXIT_OK


def cmd_verify(args) -> int:
    suites = SUITES if args.suite == "all" else (args.suite,)
    reports = [run_suite(s) for s in suites]
    for r in reports:
        for c in r.checks:
            print(f"[{c.status:5}] {r.suite}: {c.name}", file=sys.stderr)
    out = {"ok": all(r.ok for r in reports), "suites": [r.as_dict() for r in reports]}
    if not args.timing:
        for s in out["suites"]:
            s.pop("elapsed_s")
    print(dumps(out))
    return EXIT_OK if out["ok"] else EXIT_VERIFY


# parser

def _add_pair(p, required: bool = True):
    if required:
        p.add_argument("gt", help="ground-truth trajectory CSV")
        p.add_argument("hyp", help="hypothesis trajectory CSV")
    else:
        p.add_argument("gt", nargs="?", help="ground-truth trajectory CSV")
        p.add_argument("hyp", nargs="?", help="hypothesis trajectory CSV")
    p.add_argument("--M", type=float, required=required, help="miss penalty (no default; data-scale dependent)")


def _add_solver(p):
    p.add_argument("--norm", choices=("colsum", "entrywise"), default="colsum")
    p.add_argument("--tol", type=float, default=0.01, help="relative optimality tolerance")
    p.add_argument("--max-iter", type=int, default=1000)
    p.add_argument("--backend", choices=("auto", "admm", "lp"), default="auto")
    p.add_argument("--sparsify", type=float, default=None, metavar="D", help="fix weights of pairs farther than D to zero")


def _add_grid(p):
    g = p.add_mutually_exclusive_group()
    g.add_argument("--alphas", help="comma-separated switch weights, ascending")
    g.add_argument("--auto-grid", type=int, default=20, metavar="N", help="N weights around the data scale (default)")
    p.add_argument("--refine", type=int, default=1, help="hull refinement rounds")


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="trajdist", description="Distances between sets of trajectories.")
    ap.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = ap.add_subparsers(dest="command", required=True)

    p = sub.add_parser("dist", help="one distance between two trajectory files")
    _add_pair(p)
    p.add_argument("--metric", choices=("ospa", "motp", "dnat", "dcomp"), required=True)
    p.add_argument("--thr", type=float, help="CLEAR MOT anchoring threshold (motp)")
    p.add_argument("--alpha", type=float, help="switch weight (dcomp, dnat)")
    p.add_argument("--K", choices=KINDS, help="switch cost (dnat)")
    p.add_argument("--beta", type=float, help="switch budget (dnat with maxcount)")
    _add_solver(p)
    p.add_argument("--trace", metavar="CSV", help="write the ADMM iteration trace (dcomp)")
    p.add_argument("--timing", action="store_true", help="include wall time in the report")
    p.set_defaults(func=cmd_dist)

    p = sub.add_parser("tradeoff", help="distance/switch trade-off curve as CSV")
    _add_pair(p)
    _add_solver(p)
    _add_grid(p)
    p.add_argument("--out", help="CSV path (default stdout)")
    p.set_defaults(func=cmd_tradeoff)

    p = sub.add_parser("auc", help="normalized trade-off AUC of the relaxed distance and of MOTP")
    _add_pair(p, required=False)
    _add_solver(p)
    _add_grid(p)
    p.add_argument("--sweep", choices=KNOBS, help="average over generated pairs while varying one knob")
    p.add_argument("--values", help="knob levels, comma-separated")
    p.add_argument("--repeats", type=int, default=10)
    p.add_argument("--n-traj", type=int, default=10)
    p.add_argument("--T", type=int, default=50)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--solver-defaults", action="store_true", help="use the sweep's tuned solver settings")
    p.set_defaults(func=cmd_auc)

    p = sub.add_parser("gen", help="generate a synthetic ground truth and tracker output")
    p.add_argument("--config", help="JSON file with generator settings; flags override it")
    p.add_argument("--n-traj", dest="n_traj", type=int)
    p.add_argument("--T", dest="t_horizon", type=int)
    p.add_argument("--dim", dest="state_dim", type=int)
    p.add_argument("--seed", type=int)
    for k in KNOBS + ("DROPfrag", "swap_prob", "turn_prob", "box"):
        p.add_argument(f"--{k}", type=float)
    p.add_argument("--out-prefix", required=True)
    p.set_defaults(func=cmd_gen)

    p = sub.add_parser("verify", help="run the property and counterexample checks")
    p.add_argument("--suite", choices=SUITES + ("all",), default="all")
    p.add_argument("--timing", action="store_true")
    p.set_defaults(func=cmd_verify)
    return ap


def main(argv=None) -> int:
    ap = build_parser()
    args = ap.parse_args(argv)
    if args.command in ("dist", "tradeoff", "auc") and args.M is not None and args.M <= 0:
        ap.error("--M must be positive")
    try:
        return args.func(args)
    except (InvalidInputError, InstanceTooLargeError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INPUT
    except TrajdistError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_SOLVER


if __name__ == "__main__":
    sys.exit(main())
