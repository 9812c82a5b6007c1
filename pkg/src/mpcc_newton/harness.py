"""
Seeded batch experiments and the point diagnosis report.

Run i of a batch with master seed S starts from a point drawn by a Philox generator keyed by a
seed derived from (S, i) alone, so records do not depend on run order or worker count.
"""
from __future__ import annotations
import logging
import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from typing import Any, Dict, List, Optional, Tuple

import numpy as np

from .diagnostics import (
    StationarityClass,
    Violations,
    check_mpcc_licq,
    check_mpcc_ssoc,
    check_relaxed_lq_cq,
    classify_stationarity,
    violations,
)
from .errors import ConfigError, EnumerationLimitError
from .exporter import write_csv
from .merit import merit
from .model import PrimalDual, RunRecord, Summary
from .parser import load_lq_problem
from .problem import MpccProblem, builtin, builtin_names
from .residual import assemble_F
from .solver import SolveOptions, SolveStatus, solve_global, solve_local

_log = logging.getLogger(__name__)

CLASSIFY_TOL = 1e-8


@dataclass(frozen=True)
class ExperimentConfig:
    problem: str
    params: Dict[str, Any] = field(default_factory=dict)
    runs: int = 1
    master_seed: int = 0
    options: SolveOptions = field(default_factory=SolveOptions)
    out: Optional[str] = None
    workers: int = 1
    local: bool = False
    # None: stationarity stop and BFGS-scaled merit steps on for the perturbed problem only
    stat_stop: Optional[bool] = None
    merit_direction: Optional[str] = None

    def __post_init__(self) -> None:
        if isinstance(self.runs, bool) or not isinstance(self.runs, int) or self.runs < 1:
            raise ConfigError(f"runs must be a positive integer, got {self.runs!r}")
        if not isinstance(self.workers, int) or self.workers < 1:
            raise ConfigError(f"workers must be a positive integer, got {self.workers!r}")
        if not 0 <= int(self.master_seed) < 2 ** 64:
            raise ConfigError(f"master seed must be a 64-bit unsigned integer, got {self.master_seed}")

    def resolved_options(self) -> SolveOptions:
        stop = self.stat_stop
        if stop is None:
            stop = self.problem == "perturbed" or self.options.enable_stationarity_stop
        direction = self.merit_direction
        if direction is None:
            direction = "bfgs" if self.problem == "perturbed" else self.options.merit_direction
        return self.options.replace(enable_stationarity_stop=bool(stop), merit_direction=direction)


def resolve_problem(name: str, params: Optional[Dict[str, Any]] = None) -> MpccProblem:
    """A built-in problem by name, otherwise a linear-quadratic problem file."""
    params = params or {}
    if name in builtin_names():
        return builtin(name, **params)
    if params:
        raise ConfigError(f"parameters {sorted(params)} only apply to built-in problems")
    return load_lq_problem(name)


def derive_seed(master_seed: int, run_index: int) -> int:
    state = np.random.SeedSequence([int(master_seed), int(run_index)]).generate_state(1, np.uint64)
    return int(state[0])


def random_start(problem: MpccProblem, seed: int) -> PrimalDual:
    """Every coordinate of z uniform on [-n, n]."""
    dims = problem.dims
    n = dims[0]
    size = PrimalDual.zeros(dims).size
    rng = np.random.Generator(np.random.Philox(key=int(seed)))
    return PrimalDual.from_vector(rng.uniform(-n, n, size), dims)


def primal_error(problem: MpccProblem, z: PrimalDual) -> float:
    if problem.reference_x is None:
        return math.nan
    return float(np.linalg.norm(z.x - problem.reference_x))


def run_one(problem: MpccProblem, config: ExperimentConfig, index: int,
            options: Optional[SolveOptions] = None) -> RunRecord:
    options = options or config.resolved_options()
    seed = derive_seed(config.master_seed, index)
    try:
        z0 = random_start(problem, seed)
        solve = solve_local if config.local else solve_global
        report = solve(problem, z0, options)
        label = classify_stationarity(problem, report.final_z, CLASSIFY_TOL).value
        rec = RunRecord(
            run=index,
            seed=seed,
            status=report.status.value,
            iterations=report.iterations,
            resid=report.final_residual_norm,
            merit_grad=report.final_merit_grad_norm,
            err=primal_error(problem, report.final_z),
            label=label,
            ms=1000.0 * report.wall_time,
        )
    except Exception as exc:  # recorded per run, the batch goes on
        _log.warning("run %d (seed %d) failed: %s", index, seed, exc)
        rec = RunRecord(index, seed, "error", 0, math.nan, math.nan, math.nan, "", 0.0, str(exc))
    _log.debug("run %d: %s after %d iterations", index, rec.status, rec.iterations)
    return rec


def summarize(problem_name: str, records: List[RunRecord]) -> Summary:
    iters = np.array([r.iterations for r in records if r.status != "error"], dtype=float)
    errs = np.array([r.err for r in records
                     if r.status == SolveStatus.CONVERGED_RESIDUAL.value and not math.isnan(r.err)])
    ms = np.array([r.ms for r in records], dtype=float)
    status_counts: Dict[str, int] = {}
    label_counts: Dict[str, int] = {}
    for r in records:
        status_counts[r.status] = status_counts.get(r.status, 0) + 1
        if r.label:
            label_counts[r.label] = label_counts.get(r.label, 0) + 1
    return Summary(
        problem=problem_name,
        runs=len(records),
        converged=status_counts.get(SolveStatus.CONVERGED_RESIDUAL.value, 0),
        stationary=status_counts.get(SolveStatus.STATIONARY_MERIT.value, 0),
        errors=status_counts.get("error", 0),
        mean_iterations=float(iters.mean()) if iters.size else math.nan,
        median_iterations=float(np.median(iters)) if iters.size else math.nan,
        mean_error=float(errs.mean()) if errs.size else math.nan,
        mean_ms=float(ms.mean()) if ms.size else math.nan,
        status_counts=status_counts,
        label_counts=label_counts,
    )


def run_experiment(config: ExperimentConfig,
                   problem: Optional[MpccProblem] = None) -> Tuple[List[RunRecord], Summary]:
    problem = problem or resolve_problem(config.problem, config.params)
    options = config.resolved_options()
    _log.info("running %d %s solve(s) of %s, master seed %d, %d worker(s)",
              config.runs, "local" if config.local else "global", problem.name,
              config.master_seed, config.workers)
    indices = range(config.runs)
    if config.workers > 1:
        with ThreadPoolExecutor(max_workers=config.workers) as pool:
            records = list(pool.map(lambda i: run_one(problem, config, i, options), indices))
    else:
        records = [run_one(problem, config, i, options) for i in indices]
    records.sort(key=lambda r: r.run)
    summary = summarize(problem.name, records)
    if config.out:
        write_csv(records, config.out)
    return records, summary


@dataclass(frozen=True)
class DiagnosticReport:
    label: StationarityClass
    violations: Violations
    licq: bool
    relaxed_cq: bool
    ssoc: Optional[bool]
    ssoc_note: str
    residual_norm: float
    merit: float
    merit_grad_norm: float


def diagnose(problem: MpccProblem, z: PrimalDual, tol: float = CLASSIFY_TOL) -> DiagnosticReport:
    z.check_dims(problem.dims)
    label = classify_stationarity(problem, z, tol)
    ssoc: Optional[bool] = None
    note = ""
    if label in (StationarityClass.M, StationarityClass.S):
        try:
            ssoc = check_mpcc_ssoc(problem, z, tol_act=tol)
        except EnumerationLimitError as exc:
            note = str(exc)
    else:
        note = "not evaluated at a point that is not M-stationary"
    me = merit(problem, z)
    return DiagnosticReport(
        label=label,
        violations=violations(problem, z, tol),
        licq=check_mpcc_licq(problem, z.x, tol_act=tol),
        relaxed_cq=check_relaxed_lq_cq(problem, z, tol_act=tol),
        ssoc=ssoc,
        ssoc_note=note,
        residual_norm=assemble_F(problem, z).norm(),
        merit=me.value,
        merit_grad_norm=me.grad_norm,
    )


def format_report(report: DiagnosticReport) -> str:
    v = report.violations
    ssoc = "n/a" if report.ssoc is None else str(report.ssoc).lower()
    lines = [
        f"stationarity       {report.label.value}",
        f"MPCC-LICQ          {str(report.licq).lower()}",
        f"relaxed LQ CQ      {str(report.relaxed_cq).lower()}",
        f"MPCC-SSOC          {ssoc}" + (f" ({report.ssoc_note})" if report.ssoc_note else ""),
        f"|F|                {report.residual_norm:.3e}",
        f"Phi_FB             {report.merit:.3e}",
        f"|grad Phi_FB|      {report.merit_grad_norm:.3e}",
        f"primal violation   {v.primal:.3e} (g {v.g:.3e}, h {v.h:.3e}, "
        f"sign {v.complementarity_sign:.3e}, compl {v.complementarity:.3e})",
        f"dual violation     {v.dual:.3e} (grad L {v.grad_lagrangian:.3e}, lam sign {v.lam_sign:.3e})",
    ]
    return "\n".join(lines) + "\n"
