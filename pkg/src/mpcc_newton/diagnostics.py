"""
Stationarity and constraint-qualification checks at (nearly) feasible primal-dual points.

Index sets are computed with an explicit activity tolerance; values with magnitude at most the
tolerance count as zero, for constraint values and multipliers alike.
"""
from __future__ import annotations
from dataclasses import dataclass
from enum import Enum
from itertools import combinations
from typing import Iterable, List, Optional, Sequence, Tuple

import numpy as np
import scipy.linalg

from .errors import EnumerationLimitError
from .model import IndexPartition, PrimalDual
from .problem import MpccProblem, lagrangian

MAX_ENUMERATED_BIACTIVE = 20


class StationarityClass(str, Enum):
    INFEASIBLE = "infeasible"
    NOT_WEAKLY_STATIONARY = "not_weakly_stationary"
    WEAKLY = "weakly"
    M = "M"
    S = "S"


@dataclass(frozen=True)
class Violations:
    """Sup-norm violations of feasibility and of the weak-stationarity conditions."""

    g: float
    h: float
    complementarity_sign: float
    complementarity: float
    grad_lagrangian: float
    lam_sign: float
    lam_slack: float
    mu_inactive: float
    nu_inactive: float

    @property
    def primal(self) -> float:
        return max(self.g, self.h, self.complementarity_sign, self.complementarity)

    @property
    def dual(self) -> float:
        return max(self.grad_lagrangian, self.lam_sign, self.lam_slack, self.mu_inactive, self.nu_inactive)


def default_tol_act(x: np.ndarray) -> float:
    return 1e-8 * (1.0 + (float(np.max(np.abs(x))) if x.size else 0.0))


def _sup(v: np.ndarray) -> float:
    return float(np.max(v)) if v.size else 0.0


def _where(mask: np.ndarray) -> Tuple[int, ...]:
    return tuple(int(i) for i in np.flatnonzero(mask))


def _primal_masks(problem: MpccProblem, x: np.ndarray, tol: float):
    gx, Gx, Hx = problem.g(x), problem.G(x), problem.H(x)
    g_act = np.abs(gx) <= tol
    G0, H0 = np.abs(Gx) <= tol, np.abs(Hx) <= tol
    return g_act, (Gx > tol) & H0, G0 & (Hx > tol), G0 & H0


def active_partition(problem: MpccProblem, z: PrimalDual, tol_act: Optional[float] = None) -> IndexPartition:
    z.check_dims(problem.dims)
    tol = default_tol_act(z.x) if tol_act is None else tol_act
    g_act, plus0, zero_plus, both = _primal_masks(problem, z.x, tol)
    mu_nz, nu_nz = np.abs(z.mu) > tol, np.abs(z.nu) > tol
    return IndexPartition(
        Ig=_where(g_act),
        I_plus0=_where(plus0),
        I_0plus=_where(zero_plus),
        I_00=_where(both),
        Ig_plus=_where(g_act & (z.lam > tol)),
        I00_pmR=_where(both & mu_nz),
        I00_Rpm=_where(both & nu_nz),
        I00_00=_where(both & ~mu_nz & ~nu_nz),
    )


def violations(problem: MpccProblem, z: PrimalDual, tol_act: Optional[float] = None) -> Violations:
    z.check_dims(problem.dims)
    x = z.x
    tol = default_tol_act(x) if tol_act is None else tol_act
    gx, hx, Gx, Hx = problem.g(x), problem.h(x), problem.G(x), problem.H(x)
    g_act, plus0, zero_plus, _ = _primal_masks(problem, x, tol)
    grad = lagrangian(problem, z).grad_x
    return Violations(
        g=_sup(np.maximum(gx, 0.0)),
        h=_sup(np.abs(hx)),
        complementarity_sign=_sup(np.maximum(np.maximum(-Gx, -Hx), 0.0)),
        complementarity=_sup(np.minimum(np.abs(Gx), np.abs(Hx))),
        grad_lagrangian=_sup(np.abs(grad)),
        lam_sign=_sup(np.maximum(-z.lam, 0.0)),
        lam_slack=_sup(np.abs(z.lam[~g_act])),
        mu_inactive=_sup(np.abs(z.mu[plus0])),
        nu_inactive=_sup(np.abs(z.nu[zero_plus])),
    )


def classify_stationarity(problem: MpccProblem, z: PrimalDual, tol: float = 1e-8) -> StationarityClass:
    """Strongest stationarity notion satisfied at z, each condition checked up to tol."""
    viol = violations(problem, z, tol)
    if viol.primal > tol:
        return StationarityClass.INFEASIBLE
    if viol.dual > tol:
        return StationarityClass.NOT_WEAKLY_STATIONARY
    I00 = list(active_partition(problem, z, tol).I_00)
    mu, nu = z.mu[I00], z.nu[I00]
    if np.all((mu <= tol) & (nu <= tol)):
        return StationarityClass.S
    if np.all((np.minimum(np.abs(mu), np.abs(nu)) <= tol) | ((mu < 0) & (nu < 0))):
        return StationarityClass.M
    return StationarityClass.WEAKLY


def has_full_row_rank(M: np.ndarray, tol_rank: float = 1e-10) -> bool:
    """Rank by singular-value cutoff tol_rank * sigma_max. An empty row set counts as full rank."""
    rows, cols = M.shape
    if rows == 0:
        return True
    if rows > cols:
        return False
    s = scipy.linalg.svdvals(M)
    if s[0] == 0.0:
        return False
    return int(np.sum(s > tol_rank * s[0])) == rows


def _rows(jac: np.ndarray, idx: Iterable[int]) -> np.ndarray:
    return jac[sorted(set(idx)), :]


def _stack_rows(problem: MpccProblem, x: np.ndarray, g_idx, G_idx, H_idx) -> np.ndarray:
    n = problem.dims[0]
    blocks: List[np.ndarray] = [
        _rows(problem.jacobian("g", x), g_idx),
        problem.jacobian("h", x).reshape(-1, n),
        _rows(problem.jacobian("G", x), G_idx),
        _rows(problem.jacobian("H", x), H_idx),
    ]
    return np.vstack([b.reshape(-1, n) for b in blocks])


def check_mpcc_licq(problem: MpccProblem, x, tol_rank: float = 1e-10,
                    tol_act: Optional[float] = None) -> bool:
    x = np.asarray(x, dtype=float).reshape(-1)
    tol = default_tol_act(x) if tol_act is None else tol_act
    g_act, plus0, zero_plus, both = _primal_masks(problem, x, tol)
    M = _stack_rows(problem, x, _where(g_act), _where(zero_plus | both), _where(plus0 | both))
    return has_full_row_rank(M, tol_rank)


def relaxed_cq_matrix(problem: MpccProblem, z: PrimalDual, tol_act: Optional[float] = None) -> np.ndarray:
    part = active_partition(problem, z, tol_act)
    return _stack_rows(problem, z.x, part.Ig_plus,
                       part.I_0plus + part.I00_pmR, part.I_plus0 + part.I00_Rpm)


def check_relaxed_lq_cq(problem: MpccProblem, z: PrimalDual, tol_rank: float = 1e-10,
                        tol_act: Optional[float] = None) -> bool:
    return has_full_row_rank(relaxed_cq_matrix(problem, z, tol_act), tol_rank)


def _branches(free: Sequence[int]):
    for k in range(len(free) + 1):
        for beta in combinations(free, k):
            yield beta, tuple(i for i in free if i not in beta)


def check_mpcc_ssoc(problem: MpccProblem, z: PrimalDual, tol: float = 1e-8,
                    tol_act: Optional[float] = None, tol_rank: float = 1e-10) -> bool:
    """
    Positive definiteness of the Lagrangian Hessian on every branch subspace S_beta,
    beta ranging over the subsets of the biactive indices with vanishing multipliers.
    """
    part = active_partition(problem, z, tol_act)
    free = part.I00_00
    if len(free) > MAX_ENUMERATED_BIACTIVE:
        raise EnumerationLimitError(
            f"{len(free)} biactive indices with zero multipliers give 2^{len(free)} branches "
            f"(limit {MAX_ENUMERATED_BIACTIVE})")
    hess = lagrangian(problem, z).hess_xx
    n = problem.dims[0]
    for beta, beta_bar in _branches(free):
        M = _stack_rows(problem, z.x, part.Ig_plus,
                        part.I_0plus + part.I00_pmR + beta,
                        part.I_plus0 + part.I00_Rpm + beta_bar)
        Z = scipy.linalg.null_space(M, rcond=tol_rank) if M.shape[0] else np.eye(n)
        if Z.shape[1] == 0:
            continue
        if np.linalg.eigvalsh(Z.T @ hess @ Z).min() <= tol:
            return False
    return True
