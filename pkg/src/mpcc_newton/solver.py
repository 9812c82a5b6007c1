"""
Semismooth Newton iteration on F(z) = 0 and its globalization by the merit function Phi_FB.

Each global iteration tries the Newton direction first and keeps the full step when it reduces
Phi_FB by the factor q. Otherwise the direction is line searched (Armijo) if it passes the angle
test, and replaced by -grad Phi_FB if it does not, if the Newton matrix is singular or if the
line search gets below newton_alpha_min. With merit_direction "bfgs" that fallback direction is
scaled by a BFGS inverse Hessian of Phi_FB. For linear-quadratic problems a singular Newton
matrix first triggers the index-removal repair.
"""
from __future__ import annotations
import dataclasses
import logging
import time
from dataclasses import dataclass, field
from enum import Enum
from typing import List, Optional, Tuple

import numpy as np
import scipy.linalg.lapack as lapack

from .errors import ConfigError
from .linquad import repair_and_step
from .merit import MeritEval, merit, merit_value
from .model import PrimalDual
from .problem import MpccProblem
from .residual import ResidualEval, assemble_DF, assemble_F, extract_partition

_log = logging.getLogger(__name__)

# descent direction of the fallback step: -grad Phi_FB, or -H grad Phi_FB with a BFGS inverse Hessian H
MERIT_DIRECTIONS = ("gradient", "bfgs")


@dataclass(frozen=True)
class SolveOptions:
    q: float = 0.999
    tau_abs: float = 1e-11
    rho: float = 1e-3
    sigma: float = 0.5
    beta: float = 0.5
    max_iter: int = 1000
    max_backtracks: int = 60
    singular_rcond: float = 1e-12
    enable_stationarity_stop: bool = False
    tau_stat: float = 1e-9
    lq_repair: bool = True
    rank_tol: float = 1e-10
    newton_alpha_min: float = 1e-6
    merit_direction: str = "gradient"

    def __post_init__(self) -> None:
        for name in ("q", "rho", "sigma", "beta"):
            v = getattr(self, name)
            if not 0.0 < v < 1.0:
                raise ConfigError(f"option '{name}' must lie in (0, 1), got {v}")
        for name in ("tau_abs", "tau_stat", "singular_rcond", "rank_tol"):
            v = getattr(self, name)
            if not v > 0.0:
                raise ConfigError(f"option '{name}' must be positive, got {v}")
        for name in ("max_iter", "max_backtracks"):
            v = getattr(self, name)
            if isinstance(v, bool) or not isinstance(v, (int, np.integer)) or v < 0:
                raise ConfigError(f"option '{name}' must be a nonnegative integer, got {v!r}")
        if not 0.0 < self.newton_alpha_min <= 1.0:
            raise ConfigError(f"option 'newton_alpha_min' must lie in (0, 1], got {self.newton_alpha_min}")
        if self.merit_direction not in MERIT_DIRECTIONS:
            raise ConfigError(f"option 'merit_direction' must be one of {', '.join(MERIT_DIRECTIONS)}, "
                              f"got {self.merit_direction!r}")

    def replace(self, **changes) -> "SolveOptions":
        unknown = set(changes) - {f.name for f in dataclasses.fields(self)}
        if unknown:
            raise ConfigError(f"unknown solver option(s): {', '.join(sorted(unknown))}")
        return dataclasses.replace(self, **changes)


class SolveStatus(str, Enum):
    CONVERGED_RESIDUAL = "converged_residual"
    STATIONARY_MERIT = "stationary_merit"
    MAX_ITER = "max_iter"
    LINE_SEARCH_FAILURE = "line_search_failure"


class StepKind(str, Enum):
    NEWTON_FULL = "newton_full"
    NEWTON_LINESEARCH = "newton_linesearch"
    GRADIENT = "gradient"
    NEWTON_REJECTED = "newton_rejected"   # Newton direction dropped, merit descent step taken
    LQ_REPAIRED = "lq_repaired"


@dataclass(frozen=True)
class StepRecord:
    kind: StepKind
    alpha: float
    residual_norm: float
    merit: float


@dataclass
class SolveReport:
    status: SolveStatus
    iterations: int
    final_z: PrimalDual
    final_residual_norm: float
    final_merit: float
    final_merit_grad_norm: float
    wall_time: float
    steps: List[StepRecord] = field(default_factory=list)
    residual_history: List[float] = field(default_factory=list)
    merit_history: List[float] = field(default_factory=list)

    @property
    def converged(self) -> bool:
        return self.status == SolveStatus.CONVERGED_RESIDUAL

    def step_counts(self) -> dict:
        counts = {kind.value: 0 for kind in StepKind}
        for s in self.steps:
            counts[s.kind.value] += 1
        return counts


@dataclass(frozen=True)
class NewtonStep:
    direction: Optional[np.ndarray]
    singular: bool
    rcond: float


def newton_direction(problem: MpccProblem, z: PrimalDual, opts: Optional[SolveOptions] = None,
                     ev: Optional[ResidualEval] = None) -> NewtonStep:
    """Solve DF(z) d = -F(z) by LU with partial pivoting; singular if rcond < opts.singular_rcond."""
    opts = opts or SolveOptions()
    ev = ev if ev is not None else assemble_F(problem, z)
    DF = assemble_DF(problem, z, ev).DF
    if DF.shape[0] == 0:
        return NewtonStep(np.zeros(0), False, 1.0)
    anorm = float(np.linalg.norm(DF, 1))
    if not np.isfinite(anorm) or anorm == 0.0:
        return NewtonStep(None, True, 0.0)
    lu, piv, info = lapack.dgetrf(DF)
    if info > 0:
        # exactly zero pivot
        return NewtonStep(None, True, 0.0)
    rcond, _ = lapack.dgecon(lu, anorm, norm="1")
    rcond = float(rcond)
    if not rcond >= opts.singular_rcond:
        return NewtonStep(None, True, rcond)
    d, _ = lapack.dgetrs(lu, piv, -ev.F)
    if not np.all(np.isfinite(d)):
        return NewtonStep(None, True, rcond)
    return NewtonStep(d, False, rcond)


def _shift(z: PrimalDual, d: np.ndarray, alpha: float = 1.0) -> PrimalDual:
    return PrimalDual.from_vector(z.stack() + alpha * d, z.dims)


def _armijo(problem: MpccProblem, z: PrimalDual, d: np.ndarray, me: MeritEval,
            opts: SolveOptions, alpha_min: float = 0.0) -> Tuple[Optional[PrimalDual], float]:
    slope = float(me.grad @ d)
    alpha = 1.0
    for _ in range(opts.max_backtracks + 1):
        if alpha < alpha_min:
            break
        trial = _shift(z, d, alpha)
        if merit_value(problem, trial) <= me.value + opts.sigma * alpha * slope:
            return trial, alpha
        alpha *= opts.beta
    return None, alpha


class InverseBfgs:
    """
    Dense BFGS approximation H of the inverse Hessian of Phi_FB, fed with every accepted step.
    Until the first update H is the identity, so the first fallback step is a plain gradient step.
    Pairs with s^T y <= curv_tol |s| |y| are skipped, which keeps H positive definite.
    """

    def __init__(self, curv_tol: float = 1e-12):
        self.H: Optional[np.ndarray] = None
        self.curv_tol = curv_tol

    @property
    def active(self) -> bool:
        return self.H is not None

    def reset(self) -> None:
        self.H = None

    def apply(self, g: np.ndarray) -> np.ndarray:
        return g.copy() if self.H is None else self.H @ g

    def update(self, s: np.ndarray, y: np.ndarray) -> bool:
        sy = float(s @ y)
        if not sy > self.curv_tol * np.linalg.norm(s) * np.linalg.norm(y):
            return False
        if self.H is None:
            self.H = (sy / float(y @ y)) * np.eye(s.size)
        rho = 1.0 / sy
        Hy = self.H @ y
        self.H += (rho * rho * float(y @ Hy) + rho) * np.outer(s, s) - rho * (np.outer(Hy, s) + np.outer(s, Hy))
        return True


def _report(status, k, z, ev, me, steps, res_hist, merit_hist, t0) -> SolveReport:
    return SolveReport(
        status=status,
        iterations=k,
        final_z=z,
        final_residual_norm=ev.norm(),
        final_merit=me.value,
        final_merit_grad_norm=me.grad_norm,
        wall_time=time.perf_counter() - t0,
        steps=steps,
        residual_history=res_hist,
        merit_history=merit_hist,
    )


def solve_local(problem: MpccProblem, z0: PrimalDual, opts: Optional[SolveOptions] = None) -> SolveReport:
    """
    Plain semismooth Newton iteration without globalization, stopped once |F|_inf <= tau_abs.
    A singular Newton matrix ends the run with status line_search_failure.
    """
    opts = opts or SolveOptions()
    t0 = time.perf_counter()
    z0.check_dims(problem.dims)
    z = z0.copy()
    ev = assemble_F(problem, z)
    res_hist = [ev.norm()]
    merit_hist = [merit_value(problem, z)]
    steps: List[StepRecord] = []
    k = 0
    while True:
        if ev.norm_inf() <= opts.tau_abs:
            status = SolveStatus.CONVERGED_RESIDUAL
            break
        if k >= opts.max_iter:
            status = SolveStatus.MAX_ITER
            break
        step = newton_direction(problem, z, opts, ev)
        if step.singular:
            _log.debug("iter %d: singular Newton matrix (rcond %.3e)", k, step.rcond)
            status = SolveStatus.LINE_SEARCH_FAILURE
            break
        z = _shift(z, step.direction)
        ev = assemble_F(problem, z)
        k += 1
        res_hist.append(ev.norm())
        merit_hist.append(merit_value(problem, z))
        steps.append(StepRecord(StepKind.NEWTON_FULL, 1.0, res_hist[-1], merit_hist[-1]))
        _log.debug("iter %d: |F| = %.3e", k, res_hist[-1])
    me = merit(problem, z)
    _log.info("local solve of %s: %s after %d iterations, |F| = %.3e",
              problem.name, status.value, k, ev.norm())
    return _report(status, k, z, ev, me, steps, res_hist, merit_hist, t0)


def solve_global(problem: MpccProblem, z0: PrimalDual, opts: Optional[SolveOptions] = None) -> SolveReport:
    opts = opts or SolveOptions()
    t0 = time.perf_counter()
    z0.check_dims(problem.dims)
    z = z0.copy()
    ev = assemble_F(problem, z)
    me = merit(problem, z)
    res_hist, merit_hist = [ev.norm()], [me.value]
    steps: List[StepRecord] = []
    repair_enabled = opts.lq_repair and problem.is_linear_quadratic
    bfgs = InverseBfgs() if opts.merit_direction == "bfgs" else None
    k = 0
    while True:
        if ev.norm() <= opts.tau_abs:
            status = SolveStatus.CONVERGED_RESIDUAL
            break
        if opts.enable_stationarity_stop and me.grad_norm <= opts.tau_stat:
            status = SolveStatus.STATIONARY_MERIT
            break
        if k >= opts.max_iter:
            status = SolveStatus.MAX_ITER
            break

        step = newton_direction(problem, z, opts, ev)
        z_next: Optional[PrimalDual] = None
        alpha = 1.0
        kind: Optional[StepKind] = None

        if step.singular and repair_enabled:
            repaired = repair_and_step(problem, z, extract_partition(ev), rank_tol=opts.rank_tol)
            if repaired is not None and merit_value(problem, repaired.z) <= opts.q * me.value:
                z_next, kind = repaired.z, StepKind.LQ_REPAIRED

        if kind is None and not step.singular:
            d = step.direction
            full = _shift(z, d)
            if merit_value(problem, full) <= opts.q * me.value:
                z_next, kind = full, StepKind.NEWTON_FULL
            elif float(me.grad @ d) > -opts.rho * np.linalg.norm(d) * me.grad_norm:
                kind = StepKind.NEWTON_REJECTED
            else:
                z_next, alpha = _armijo(problem, z, d, me, opts, alpha_min=opts.newton_alpha_min)
                if z_next is not None:
                    kind = StepKind.NEWTON_LINESEARCH
                else:
                    # no Armijo step down to newton_alpha_min
                    kind = StepKind.NEWTON_REJECTED
                    _log.debug("iter %d: Newton line search stopped at alpha %.3e", k, alpha)

        if kind is None or kind == StepKind.NEWTON_REJECTED:
            kind = kind or StepKind.GRADIENT
            d = -me.grad if bfgs is None else -bfgs.apply(me.grad)
            z_next, alpha = _armijo(problem, z, d, me, opts)
            if z_next is None and bfgs is not None and bfgs.active:
                _log.debug("iter %d: no Armijo step along the BFGS direction, restarting from -grad", k)
                bfgs.reset()
                z_next, alpha = _armijo(problem, z, -me.grad, me, opts)

        if z_next is None:
            status = SolveStatus.LINE_SEARCH_FAILURE
            _log.debug("iter %d: no Armijo step after %d backtracks", k, opts.max_backtracks)
            break

        z_prev, grad_prev = z, me.grad
        z = z_next
        ev = assemble_F(problem, z)
        me = merit(problem, z)
        if bfgs is not None:
            bfgs.update(z.stack() - z_prev.stack(), me.grad - grad_prev)
        k += 1
        res_hist.append(ev.norm())
        merit_hist.append(me.value)
        steps.append(StepRecord(kind, alpha, res_hist[-1], me.value))
        _log.debug("iter %d: |F| = %.3e, Phi_FB = %.3e, %s, alpha = %g",
                   k, res_hist[-1], me.value, kind.value, alpha)

    _log.info("global solve of %s: %s after %d iterations, |F| = %.3e",
              problem.name, status.value, k, ev.norm())
    return _report(status, k, z, ev, me, steps, res_hist, merit_hist, t0)
