from __future__ import annotations
import argparse
import logging
import sys
from typing import Any, Dict, List, Optional

from .config import load_options
from .errors import MpccError
from .exporter import format_summary
from .harness import ExperimentConfig, diagnose, format_report, resolve_problem, run_experiment
from .parser import load_point
from .problem import LinearQuadraticProblem, builtin_names, reference_point
from .serializer import dump_lq_problem
from .solver import MERIT_DIRECTIONS, SolveOptions

_LEVELS = (logging.WARNING, logging.INFO, logging.DEBUG)


def _add_problem_args(p: argparse.ArgumentParser) -> None:
    p.add_argument("--problem", required=True,
                   help=f"built-in problem ({', '.join(builtin_names())}) or a problem file")
    p.add_argument("--c", type=float, help="regularization weight of the toy problem")
    p.add_argument("--eps", type=float, help="perturbation of the perturbed problem")
    p.add_argument("--N", type=int, help="grid size of the obstacle problem")


def _problem_params(args: argparse.Namespace) -> Dict[str, Any]:
    names = {"toy": "c", "perturbed": "eps", "obstacle": "N"}
    params = {}
    for flag in ("c", "eps", "N"):
        value = getattr(args, flag)
        if value is None:
            continue
        if names.get(args.problem) != flag:
            raise MpccError(f"--{flag} does not apply to problem '{args.problem}'")
        params[flag] = value
    return params


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="mpcc-newton",
                                     description="Globalized semismooth Newton method for M-stationary points of MPCCs")
    parser.add_argument("-v", "--verbose", action="count", default=0, help="more log output (repeatable)")
    sub = parser.add_subparsers(dest="command", required=True)

    solve = sub.add_parser("solve", help="batch of seeded runs, CSV output")
    _add_problem_args(solve)
    solve.add_argument("--runs", type=int, default=1)
    solve.add_argument("--seed", type=int, default=0, help="master seed")
    solve.add_argument("--tol", type=float, help="residual tolerance tau_abs")
    solve.add_argument("--max-iter", type=int)
    solve.add_argument("--stat-stop", action="store_true", default=None,
                       help="stop at merit-stationary points (default: on for perturbed only)")
    solve.add_argument("--no-lq-repair", action="store_true")
    solve.add_argument("--merit-direction", choices=MERIT_DIRECTIONS,
                       help="fallback descent direction (default: bfgs for perturbed, else gradient)")
    solve.add_argument("--local", action="store_true", help="plain Newton iteration, no globalization")
    solve.add_argument("--options", help="YAML file of solver option overrides")
    solve.add_argument("--workers", type=int, default=1)
    solve.add_argument("--out", help="CSV output path")

    diag = sub.add_parser("diagnose", help="stationarity and constraint qualifications at a point")
    _add_problem_args(diag)
    diag.add_argument("--point", help="point file (default: the known root of a built-in problem)")
    diag.add_argument("--tol", type=float, default=1e-8)

    export = sub.add_parser("export", help="write a linear-quadratic problem file")
    _add_problem_args(export)
    export.add_argument("--out", required=True)
    return parser


def _options(args: argparse.Namespace) -> SolveOptions:
    opts = load_options(args.options) if args.options else SolveOptions()
    changes: Dict[str, Any] = {}
    if args.tol is not None:
        changes["tau_abs"] = args.tol
    if args.max_iter is not None:
        changes["max_iter"] = args.max_iter
    if args.no_lq_repair:
        changes["lq_repair"] = False
    return opts.replace(**changes)


def _cmd_solve(args: argparse.Namespace) -> int:
    config = ExperimentConfig(
        problem=args.problem,
        params=_problem_params(args),
        runs=args.runs,
        master_seed=args.seed,
        options=_options(args),
        out=args.out,
        workers=args.workers,
        local=args.local,
        stat_stop=args.stat_stop,
        merit_direction=args.merit_direction,
    )
    _records, summary = run_experiment(config)
    sys.stdout.write(format_summary(summary))
    return 0


def _cmd_diagnose(args: argparse.Namespace) -> int:
    problem = resolve_problem(args.problem, _problem_params(args))
    if args.point:
        z = load_point(args.point, problem.dims)
    else:
        z = reference_point(problem)
        if z is None:
            raise MpccError(f"problem '{problem.name}' has no known root, pass --point")
    sys.stdout.write(format_report(diagnose(problem, z, args.tol)))
    return 0


def _cmd_export(args: argparse.Namespace) -> int:
    problem = resolve_problem(args.problem, _problem_params(args))
    if not isinstance(problem, LinearQuadraticProblem):
        raise MpccError(f"problem '{problem.name}' is not linear-quadratic")
    with open(args.out, "w", encoding="utf-8") as f:
        f.write(dump_lq_problem(problem))
    return 0


_COMMANDS = {"solve": _cmd_solve, "diagnose": _cmd_diagnose, "export": _cmd_export}


def main(argv: Optional[List[str]] = None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=_LEVELS[min(args.verbose, 2)], format="%(levelname)s %(name)s: %(message)s")
    try:
        return _COMMANDS[args.command](args)
    except (MpccError, OSError) as exc:
        print(f"mpcc-newton: error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
