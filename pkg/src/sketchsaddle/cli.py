"""Command line entry points.

Subcommands: generate (write an instance directory), solve (one exact
or sketched solve, JSON report on stdout), sweep (run a config file and
emit records/figures), check (bound fractions over emitted records),
calibrate-c (empirical embedding constant).  Exit code 0 on success, 1
on usage or configuration errors, 2 when `check` finds a violated
guarantee.
"""

import argparse
import dataclasses
import json
import sys

import numpy as np

from .errors import SketchSaddleError
from .harness import SweepConfig, build_instance, check_bounds, fit_rate, run_sweep
from .instances import gen_erm, gen_planted_quadratic, reference_pair
from .matio import load_instance, save_instance
from .model import sparsity_stats
from .regbounds import (DEFAULT_C, OracleQuantities, minimum_sketch_size,
                        prescribe_regularization)
from .report import emit_report, read_records_csv
from .sketch import DISTRIBUTIONS, apply_sketch, calibrate_c, make_projection
from .solver import SolverOptions, solve_exact, solve_sketched


class _Parser(argparse.ArgumentParser):
    # argparse exits with 2 on bad usage; the contract here reserves 2
    # for failed checks, so usage problems are remapped to 1.
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(1, f"{self.prog}: error: {message}\n")


def _build_parser():
    parser = _Parser(prog="sketchsaddle",
                     description="Sketched saddle solves with sparse recovery checks.")
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)

    gen = sub.add_parser("generate", help="write a synthetic instance directory")
    gen.add_argument("--kind", choices=("planted", "erm"), required=True)
    gen.add_argument("--out", required=True, help="directory to create")
    gen.add_argument("--d", type=int, required=True)
    gen.add_argument("--n", type=int, required=True)
    gen.add_argument("--seed", type=int, default=0)
    gen.add_argument("--s-w", type=int, default=5, help="planted primal support size")
    gen.add_argument("--s-lambda", type=int, default=5,
                     help="planted dual support size (planted kind)")
    gen.add_argument("--alpha", type=float, default=1.0)
    gen.add_argument("--beta", type=float, default=1.0)
    gen.add_argument("--style", choices=("rows", "columns"), default="rows",
                     help="which side of the coupling matrix is normalized")
    gen.add_argument("--loss", choices=("squared_hinge", "logistic"),
                     default="squared_hinge", help="erm kind only")
    gen.add_argument("--reg", type=float, default=None, help="erm ridge weight")
    gen.add_argument("--margin-fraction", type=float, default=0.5)

    slv = sub.add_parser("solve", help="solve one instance, report JSON")
    slv.add_argument("--instance", required=True, help="instance directory")
    mode = slv.add_mutually_exclusive_group(required=True)
    mode.add_argument("--exact", action="store_true")
    mode.add_argument("--m", type=int, help="sketch size")
    slv.add_argument("--distribution", choices=DISTRIBUTIONS, default="gaussian")
    slv.add_argument("--side", choices=("right", "left"), default="right")
    slv.add_argument("--theorem", default=None,
                     help="prescription to derive regularization from (planted only)")
    slv.add_argument("--gamma-w", type=float, default=None)
    slv.add_argument("--gamma-lambda", type=float, default=None)
    slv.add_argument("--scale-factor", type=float, default=1.0)
    slv.add_argument("--c", type=float, default=DEFAULT_C)
    slv.add_argument("--delta", type=float, default=0.05)
    slv.add_argument("--sketch-seed", type=int, default=0)
    slv.add_argument("--allow-small-m", action="store_true",
                     help="permit sketch sizes below the guarantee floor")
    slv.add_argument("--tolerance", type=float, default=None)
    slv.add_argument("--max-iterations", type=int, default=None)
    slv.add_argument("--accelerated", action="store_true")
    slv.add_argument("--report", default=None, help="write JSON here instead of stdout")

    swp = sub.add_parser("sweep", help="run a sweep config and emit outputs")
    swp.add_argument("--config", required=True, help="JSON config file")
    swp.add_argument("--output", default=None, help="override output directory")
    swp.add_argument("--workers", type=int, default=1)
    swp.add_argument("--formats", default="csv,dat,svg",
                     help="comma-separated subset of csv,dat,svg")

    chk = sub.add_parser("check", help="verify bound fractions over sweep records")
    chk.add_argument("--records", required=True, help="records.csv from a sweep")
    chk.add_argument("--meta", default=None,
                     help="meta.json (default: next to the records file)")

    cal = sub.add_parser("calibrate-c", help="estimate the embedding constant")
    cal.add_argument("--distribution", choices=DISTRIBUTIONS, default="gaussian")
    cal.add_argument("--trials", type=int, default=30000)
    cal.add_argument("--seed", type=int, default=0)
    cal.add_argument("--margin", type=float, default=2.0)
    return parser


def _cmd_generate(args):
    if args.kind == "planted":
        instance = gen_planted_quadratic(
            args.d, args.n, args.s_w, args.s_lambda,
            alpha=args.alpha, beta=args.beta,
            matrix_style=args.style, seed=args.seed)
    else:
        instance = gen_erm(args.loss, args.d, args.n, args.s_w,
                           reg=args.reg, margin_fraction=args.margin_fraction,
                           seed=args.seed)
    save_instance(args.out, instance)
    print(json.dumps({"out": args.out, "kind": args.kind,
                      "d": instance.problem.d, "n": instance.problem.n}))
    return 0


def _cmd_solve(args):
    instance = load_instance(args.instance)
    problem = instance.problem
    options = SolverOptions(
        tolerance=args.tolerance,
        max_iterations=args.max_iterations or SolverOptions().max_iterations,
        accelerated=args.accelerated)
    out = {"instance": args.instance}
    if args.exact:
        pair, report = solve_exact(problem, options)
        out["mode"] = "exact"
    else:
        if args.theorem is not None:
            oracle = OracleQuantities.from_instance(instance)
            pres = prescribe_regularization(
                args.theorem, oracle, args.m, c=args.c, delta=args.delta,
                enforce_minimum=not args.allow_small_m)
            pres = pres.scaled(args.scale_factor)
            gamma_w, gamma_lambda = pres.gamma_w, pres.gamma_lambda
            side = pres.side
        else:
            if args.gamma_w is None or args.gamma_lambda is None:
                raise SketchSaddleError(
                    "sketched solve needs --theorem or both --gamma-w and --gamma-lambda")
            gamma_w, gamma_lambda = args.gamma_w, args.gamma_lambda
            side = args.side
        rows = problem.n if side == "right" else problem.d
        R = make_projection(rows, args.m, args.distribution, args.sketch_seed)
        sketched = apply_sketch(problem, R, side)
        pair, report = solve_sketched(sketched, gamma_w, gamma_lambda, options)
        out["mode"] = "sketched"
        out["side"] = side
        out["m"] = args.m
        out["distribution"] = args.distribution
        out["gamma_w"] = gamma_w
        out["gamma_lambda"] = gamma_lambda
    out["report"] = report.to_dict()
    out["sparsity_w"] = dataclasses.asdict(sparsity_stats(pair.w))
    out["sparsity_lambda"] = dataclasses.asdict(sparsity_stats(pair.lam))
    w_ref, lam_ref = reference_pair(instance)
    out["err_w_l2"] = float(np.linalg.norm(pair.w - w_ref))
    out["err_lambda_l2"] = float(np.linalg.norm(pair.lam - lam_ref))
    text = json.dumps(out, indent=2, sort_keys=True)
    if args.report:
        with open(args.report, "w") as fh:
            fh.write(text + "\n")
    else:
        print(text)
    return 0


def _cmd_sweep(args):
    with open(args.config) as fh:
        raw = json.load(fh)
    config = SweepConfig.from_dict(raw)
    outdir = args.output or config.output
    if outdir is None:
        raise SketchSaddleError("no output directory (config `output` or --output)")
    formats = tuple(f for f in args.formats.split(",") if f)
    bad = [f for f in formats if f not in ("csv", "dat", "svg")]
    if bad:
        raise SketchSaddleError(f"unknown output formats: {bad}")
    records = run_sweep(config, workers=args.workers)
    instance = build_instance(config)
    oracle = OracleQuantities.from_instance(instance)
    meta = {"config": config.to_dict(),
            "s_w": oracle.s_w, "s_lambda": oracle.s_lambda,
            "alpha": oracle.alpha, "beta": oracle.beta,
            "delta": config.delta, "side": config.side,
            "guaranteed": config.guaranteed,
            "minimum_sketch_size": minimum_sketch_size(config.c, config.delta)}
    written = emit_report(records, outdir, meta=meta, formats=formats,
                          title=f"{config.theorem} sweep")
    print(json.dumps({"records": len(records), "written": written}, indent=2))
    return 0


def _cmd_check(args):
    records = read_records_csv(args.records)
    meta_path = args.meta
    if meta_path is None:
        import os
        meta_path = os.path.join(os.path.dirname(os.path.abspath(args.records)),
                                 "meta.json")
    with open(meta_path) as fh:
        meta = json.load(fh)
    side = meta["guaranteed"]
    check = check_bounds(records, s_w=meta["s_w"], s_lambda=meta["s_lambda"],
                         alpha=meta["alpha"], beta=meta["beta"],
                         delta=meta["delta"], side=side)
    out = {"side": side, "threshold": check.threshold,
           "frac_l2": check.frac_l2, "frac_l1": check.frac_l1,
           "frac_ratio": check.frac_ratio, "ok": check.ok}
    ms = sorted({r.m for r in records})
    if len(ms) >= 2:
        field = "err_w_l2" if side == "w" else "err_l_l2"
        fit = fit_rate(records, field)
        out["rate"] = {"slope": fit.slope, "intercept": fit.intercept,
                       "r_squared": fit.r_squared}
    print(json.dumps(out, indent=2, sort_keys=True))
    return 0 if check.ok else 2


def _cmd_calibrate(args):
    c = calibrate_c(args.distribution, trials=args.trials, seed=args.seed,
                    margin=args.margin)
    print(json.dumps({"distribution": args.distribution, "c": c,
                      "trials": args.trials}))
    return 0


_COMMANDS = {"generate": _cmd_generate, "solve": _cmd_solve,
             "sweep": _cmd_sweep, "check": _cmd_check,
             "calibrate-c": _cmd_calibrate}


def main(argv=None):
    parser = _build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return exc.code if exc.code is not None else 0
    try:
        return _COMMANDS[args.command](args)
    except SketchSaddleError as exc:
        print(f"sketchsaddle: error: {exc}", file=sys.stderr)
        return 1
    except FileNotFoundError as exc:
        print(f"sketchsaddle: error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
