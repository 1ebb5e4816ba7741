"""Command-line harness: run the refinement loop per model, emit structured
iteration logs, compare against direct full-data solves, and produce
plot-ready rate diagnostics.

Exit codes: 0 success, 2 usage error, 3 data error, 4 solver failure.
Set AGGREFINE_LOG=quiet to suppress the stderr run summary.
"""

from __future__ import annotations

import argparse
import json
import os
import sys

import numpy as np

from . import data as dio
from .core import RunConfig, run
from .lad import LadProblem
from .metrics import compare, diagnose_rates
from .s3vm import S3vmProblem
from .subsolvers.lad_lp import LadSolverError
from .subsolvers.svm_dual import SvmSolverError
from .svm import SvmProblem

EXIT_OK = 0
EXIT_USAGE = 2
EXIT_DATA = 3
EXIT_SOLVER = 4


def _add_common(p: argparse.ArgumentParser) -> None:
    p.add_argument("--input", help="CSV or svmlight file (else a synthetic instance is generated)")
    p.add_argument("--format", choices=("csv", "svmlight"), default="csv")
    p.add_argument("--response", default="y", help="response/label column for CSV input")
    p.add_argument("--n", type=int, default=1000, help="synthetic instance rows")
    p.add_argument("--m", type=int, default=5, help="synthetic instance columns")
    p.add_argument("--r0", type=float, help="initial aggregation rate override")
    p.add_argument("--tol", type=float, help="relative gap tolerance (0 disables gap stopping)")
    p.add_argument("--max-iter", type=int, default=100)
    p.add_argument("--time-limit", type=float)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--iterations", type=int, help="fixed-iteration mode: stop after K refinement rounds")
    p.add_argument("--intercept", action="store_true", help="append an all-ones column")
    p.add_argument("--oracle", action="store_true", help="also run the direct full-data solve and report metrics")
    p.add_argument("--log", help="write the iteration log (JSON lines) to this path")
    p.add_argument("--model-out", help="write the final model to this path")


def _add_problem_args(p: argparse.ArgumentParser, name: str) -> None:
    _add_common(p)
    if name == "lad":
        p.add_argument("--noise", type=float, default=1.0, help="synthetic Laplace noise scale")
    elif name == "svm":
        p.add_argument("--M", type=float, default=0.1, help="slack penalty")
        p.add_argument("--kernel", default="linear", help='"linear", "linear-gram", or "rbf:GAMMA"')
        p.add_argument("--separation", type=float, default=4.0, help="synthetic class separation")
    elif name == "s3vm":
        p.add_argument("--Ml", type=float, default=5.0, help="labeled slack penalty")
        p.add_argument("--Mu", type=float, default=1.0, help="unlabeled slack penalty")
        p.add_argument("--balance", choices=("none", "constraint", "cost"), default="none")
        p.add_argument("--balance-cost-swapped", action="store_true",
                       help="boost the minority class instead of the printed assignment")
        p.add_argument("--separation", type=float, default=4.0)
        p.add_argument("--labeled-fraction", type=float, default=0.1)


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(
        prog="aggrefine",
        description="solve L1 regression / SVM / semi-supervised SVM by "
        "aggregation and iterative cluster refinement",
    )
    sub = ap.add_subparsers(dest="command", required=True)
    for name in ("lad", "svm", "s3vm"):
        _add_problem_args(sub.add_parser(name), name)

    p_cmp = sub.add_parser("compare", help="refinement loop vs direct solve metrics")
    cmp_sub = p_cmp.add_subparsers(dest="problem", required=True)
    for name in ("lad", "svm", "s3vm"):
        _add_problem_args(cmp_sub.add_parser(name), name)

    p_diag = sub.add_parser("diagnose", help="near/far aggregation-rate curves per iteration")
    diag_sub = p_diag.add_subparsers(dest="problem", required=True)
    for name in ("lad", "svm", "s3vm"):
        q = diag_sub.add_parser(name)
        _add_problem_args(q, name)
        q.add_argument("--out", help="write the CSV here (default stdout)")
    return ap


def _load_dataset(args, kind: str) -> dio.Dataset:
    if args.input:
        if args.format == "svmlight" or args.input.endswith(".svmlight"):
            ds = dio.load_svmlight(args.input)
            if kind == "svm" and not np.all(np.isin(ds.y, (-1.0, 1.0))):
                raise dio.DataError("line 1: svmlight labels must be -1/+1 for svm")
        else:
            ds = dio.load_csv(args.input, response=args.response,
                              labels=kind if kind in ("svm", "s3vm") else None)
    elif kind == "lad":
        ds = dio.generate_lad(args.n, args.m, noise=args.noise, seed=args.seed)
    elif kind == "svm":
        ds = dio.generate_svm(args.n, args.m, separation=args.separation, seed=args.seed)
    else:
        ds = dio.generate_s3vm(args.n, args.m, separation=args.separation,
                               labeled_fraction=args.labeled_fraction, seed=args.seed)
    if args.intercept:
        ds = dio.add_intercept_column(ds)
    return ds


def _build_problem(args, kind: str, keep_history: bool = False):
    ds = _load_dataset(args, kind)
    if kind == "lad":
        problem = LadProblem(ds.X, ds.y)
    elif kind == "svm":
        kernel = getattr(args, "kernel", "linear")
        if kernel.startswith("rbf:"):
            problem = SvmProblem(ds.X, ds.y, M=args.M, kernel="rbf", gamma=float(kernel[4:]))
        elif kernel == "linear-gram":
            problem = SvmProblem(ds.X, ds.y, M=args.M, kernel="linear", use_gram=True)
        elif kernel == "linear":
            problem = SvmProblem(ds.X, ds.y, M=args.M, kernel="linear")
        else:
            raise dio.DataError(f"unknown kernel spec {kernel!r}")
    else:
        X_l, y_l, X_u, _, _ = dio.split_semisupervised(ds)
        balance = {"none": "none", "constraint": "balance-constraint", "cost": "balance-cost"}[args.balance]
        problem = S3vmProblem(
            X_l, y_l, X_u, Ml=args.Ml, Mu=args.Mu, balance=balance,
            balance_cost_swapped=args.balance_cost_swapped,
        )
    config = RunConfig(
        r0=args.r0,
        gap_tolerance=args.tol,
        max_iterations=args.max_iter,
        time_limit=args.time_limit,
        rng_seed=args.seed,
        iterations=args.iterations,
        keep_history=keep_history,
    )
    return problem, config


def _emit_log(log, n: int, stream) -> None:
    stream.write(log.header_json(n) + "\n")
    for rec in log.records:
        stream.write(rec.to_json() + "\n")
    stream.write(log.summary_json() + "\n")


def _quiet() -> bool:
    return os.environ.get("AGGREFINE_LOG", "").lower() == "quiet"


def _cmd_run(args, kind: str) -> int:
    problem, config = _build_problem(args, kind)
    log = run(problem, config)
    if args.log:
        with open(args.log, "w", encoding="utf-8") as fh:
            _emit_log(log, problem.n_entries, fh)
    else:
        _emit_log(log, problem.n_entries, sys.stdout)
    if args.model_out:
        dio.save_model(log.model, args.model_out,
                       metadata={"seed": config.rng_seed, "config_digest": config.digest()})
    if not _quiet():
        last = log.records[-1]
        print(
            f"{kind}: terminated ({log.termination_reason}) at t={last.t} "
            f"clusters={last.num_clusters} F={last.F:.6g} E={last.E:.6g} "
            f"gap={last.gap:.3g}",
            file=sys.stderr,
        )
    if args.oracle:
        metrics, _ = compare(problem, config)
        print(json.dumps({"type": "metrics", **metrics.to_dict()}))
    return EXIT_OK


def _cmd_compare(args) -> int:
    problem, config = _build_problem(args, args.problem)
    metrics, log = compare(problem, config)
    print(json.dumps({"type": "metrics", **metrics.to_dict()}))
    if args.log:
        with open(args.log, "w", encoding="utf-8") as fh:
            _emit_log(log, problem.n_entries, fh)
    return EXIT_OK


def _cmd_diagnose(args) -> int:
    problem, config = _build_problem(args, args.problem, keep_history=True)
    log = run(problem, config)
    rows = diagnose_rates(log, problem)
    out = open(args.out, "w", encoding="utf-8") if args.out else sys.stdout
    try:
        out.write("t,rate,near_clusters,far_clusters,near_entries,far_entries,near_rate,far_rate\n")
        for r in rows:
            out.write(
                f"{r['t']},{r['rate']:.8g},{r['near_clusters']},{r['far_clusters']},"
                f"{r['near_entries']},{r['far_entries']},{r['near_rate']:.8g},{r['far_rate']:.8g}\n"
            )
    finally:
        if args.out:
            out.close()
    return EXIT_OK


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        if args.command in ("lad", "svm", "s3vm"):
            return _cmd_run(args, args.command)
        if args.command == "compare":
            return _cmd_compare(args)
        return _cmd_diagnose(args)
    except dio.DataError as exc:
        print(f"data error: {exc}", file=sys.stderr)
        return EXIT_DATA
    except (FileNotFoundError, OSError) as exc:
        print(f"data error: {exc}", file=sys.stderr)
        return EXIT_DATA
    except (LadSolverError, SvmSolverError) as exc:
        print(f"solver error: {exc}", file=sys.stderr)
        return EXIT_SOLVER
    except ValueError as exc:
        print(f"data error: {exc}", file=sys.stderr)
        return EXIT_DATA


if __name__ == "__main__":
    sys.exit(main())
