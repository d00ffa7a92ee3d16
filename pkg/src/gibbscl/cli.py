"""Command line entry point: simulate, path, select, experiment."""

from __future__ import annotations

import argparse
import math
import sys
from dataclasses import replace

from .config import load_config
from .covariates import CovariateStack
from .harness import (
    make_problem, penalty_for, run_scenario, scenario_covariates, true_theta,
)
from .inference import annotate_path, pair_structure, select_model
from .path import PathConfig, RegularizationPath, adaptive_penalty, fit_path
from .pattern import PointPattern, erode_window
from .quadrature import build_design, logistic_scheme
from .objective import CompositeProblem
from .sampler import MhConfig, simulate_pattern


def cmd_simulate(args) -> int:
    config, _ = load_config(args.config)
    covariates = scenario_covariates(config)
    theta = true_theta(config, covariates)
    pattern = simulate_pattern(config.model, theta, config.observation_window, covariates,
                               MhConfig(config.mh_steps, 0.5, args.seed))
    pattern.to_csv(args.out)
    print(f"{len(pattern)} points written to {args.out}")
    return 0


def cmd_path(args) -> int:
    config, extras = load_config(args.config)
    window = config.observation_window
    pattern = PointPattern.from_csv(args.pattern, window)
    covariates = CovariateStack.from_directory(args.covariates).standardized().rescaled(window)
    if args.nd is not None:
        config = replace(config, nd=args.nd)
    delta = args.dummy_intensity if args.dummy_intensity is not None else extras.get("dummy_intensity")
    if config.estimator == "plcl" and delta is not None:
        spec = config.model
        domain = erode_window(window, spec.effective_range)
        scheme = logistic_scheme(pattern, domain, float(delta), seed=config.seed)
        design = build_design(spec, scheme, pattern, covariates)
        problem = CompositeProblem(design.matrix, scheme)
    else:
        problem, design = make_problem(config, pattern, covariates, config.seed)
    penalized = design.penalizable
    cfg = PathConfig(config.n_lambda, config.lambda_min_ratio)
    pen = penalty_for(config)
    if config.adaptive:
        pen = adaptive_penalty(problem, pen, penalized, cfg)
    path = fit_path(problem, pen, penalized, cfg, design.names)
    annotate_path(path, problem, pair_structure(config.model, problem, pattern))
    path.to_csv(args.out)
    print(f"{len(path)} fits written to {args.out}")
    return 0


def cmd_select(args) -> int:
    path = RegularizationPath.from_csv(args.path)
    entry = select_model(path, args.criterion)
    print(f"lambda\t{entry.lam!r}")
    print(f"df\t{entry.df!r}")
    print(f"{args.criterion}\t{getattr(entry, args.criterion)!r}")
    for name, v in zip(path.names, entry.theta):
        print(f"{name}\t{float(v)!r}")
    return 0


def cmd_experiment(args) -> int:
    config, _ = load_config(args.config)

    def progress(k, total):
        if not args.quiet:
            print(f"\rreplicate {k}/{total}", end="", file=sys.stderr, flush=True)

    result = run_scenario(config, args.out, progress)
    if not args.quiet:
        print(file=sys.stderr)
    for k, v in result.summary.items():
        print(f"{k}\t{v:.6g}" if isinstance(v, float) and math.isfinite(v) else f"{k}\t{v}")
    return 0


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="gibbscl", description=__doc__)
    sub = ap.add_subparsers(dest="command", required=True)

    p = sub.add_parser("simulate", help="simulate one pattern from a config")
    p.add_argument("--config", required=True)
    p.add_argument("--out", required=True)
    p.add_argument("--seed", type=int, default=0)
    p.set_defaults(func=cmd_simulate)

    p = sub.add_parser("path", help="fit a regularization path to a pattern")
    p.add_argument("--pattern", required=True)
    p.add_argument("--covariates", required=True, help="directory of grid files")
    p.add_argument("--config", required=True)
    p.add_argument("--out", required=True)
    p.add_argument("--nd", type=int, default=None)
    p.add_argument("--dummy-intensity", type=float, default=None)
    p.set_defaults(func=cmd_path)

    p = sub.add_parser("select", help="pick the criterion minimizer from a path file")
    p.add_argument("--path", required=True)
    p.add_argument("--criterion", choices=("cbic", "ceric"), default="ceric")
    p.set_defaults(func=cmd_select)

    p = sub.add_parser("experiment", help="run a simulation scenario")
    p.add_argument("--config", required=True)
    p.add_argument("--out", required=True)
    p.add_argument("--quiet", action="store_true")
    p.set_defaults(func=cmd_experiment)
    return ap


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    return args.func(args)


if __name__ == "__main__":
    sys.exit(main())
