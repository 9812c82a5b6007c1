"""
Repair of singular Newton systems for linear-quadratic MPCCs.

For index sets (Il1, Ip_mu, Ip_nu) the next iterate z+ solves

    grad_x L(z) + [hess_xx L, g'^T, h'^T, G'^T, H'^T] (z+ - z) = 0
    g_i(x) + grad g_i^T (x+ - x) = 0   (i in Il1),     lam+_i = 0 otherwise
    h(x) + h'(x) (x+ - x) = 0
    G_j(x) + grad G_j^T (x+ - x) = 0   (j in Ip_mu),   mu+_j = 0 otherwise
    H_j(x) + grad H_j^T (x+ - x) = 0   (j in Ip_nu),   nu+_j = 0 otherwise

which, for the sets read off the derivative patterns, is the Newton system up to row signs.
When it is not uniquely solvable, suspect indices are removed one by one in ascending order of
their sort key until it is.
"""
from __future__ import annotations
import logging
from dataclasses import dataclass, field
from enum import IntEnum
from typing import List, Optional, Sequence, Tuple

import numpy as np
import scipy.linalg
import scipy.linalg.lapack as lapack

from .model import PrimalDual
from .problem import MpccProblem, lagrangian
from .residual import ActivePartition, offsets

_log = logging.getLogger(__name__)


class SetTag(IntEnum):
    # value order is the tie-break order
    L1 = 0
    P_MU = 1
    P_NU = 2


@dataclass(frozen=True)
class IndexSets:
    Il1: Tuple[int, ...]
    Ip_mu: Tuple[int, ...]
    Ip_nu: Tuple[int, ...]

    @classmethod
    def from_partition(cls, part: ActivePartition) -> "IndexSets":
        return cls(tuple(part.Il1), part.Ip_mu, part.Ip_nu)

    def without(self, tag: SetTag, index: int) -> "IndexSets":
        def drop(s):
            return tuple(i for i in s if i != index)

        if tag == SetTag.L1:
            return IndexSets(drop(self.Il1), self.Ip_mu, self.Ip_nu)
        if tag == SetTag.P_MU:
            return IndexSets(self.Il1, drop(self.Ip_mu), self.Ip_nu)
        return IndexSets(self.Il1, self.Ip_mu, drop(self.Ip_nu))

    @property
    def size(self) -> int:
        return len(self.Il1) + len(self.Ip_mu) + len(self.Ip_nu)


@dataclass(frozen=True)
class Candidate:
    tag: SetTag
    index: int
    key: float


@dataclass(frozen=True)
class LqSystem:
    sets: IndexSets
    K: np.ndarray
    rhs: np.ndarray

    def residual(self, z: PrimalDual) -> np.ndarray:
        return self.K @ z.stack() - self.rhs


@dataclass
class LqRepairResult:
    z: PrimalDual
    sets: IndexSets
    removed: List[Candidate] = field(default_factory=list)
    history: List[IndexSets] = field(default_factory=list)


def build_lq_system(problem: MpccProblem, z: PrimalDual, sets: IndexSets) -> LqSystem:
    dims = problem.dims
    z.check_dims(dims)
    n, l, m, p = dims
    x = z.x
    Jg, Jh, JG, JH = (problem.jacobian(b, x) for b in ("g", "h", "G", "H"))
    gx, hx, Gx, Hx = problem.g(x), problem.h(x), problem.G(x), problem.H(x)
    lag = lagrangian(problem, z)
    ox, ol, oe, om, on = offsets(dims)
    N = n + l + m + 2 * p
    K = np.zeros((N, N))
    rhs = np.zeros(N)

    K[:n, ox:ox + n] = lag.hess_xx
    K[:n, ol:ol + l] = Jg.T
    K[:n, oe:oe + m] = Jh.T
    K[:n, om:om + p] = JG.T
    K[:n, on:on + p] = JH.T
    rhs[:n] = K[:n] @ z.stack() - lag.grad_x

    Il1 = set(sets.Il1)
    for i in range(l):
        r = n + i
        if i in Il1:
            K[r, ox:ox + n] = Jg[i]
            rhs[r] = Jg[i] @ x - gx[i]
        else:
            K[r, ol + i] = 1.0

    rows = slice(n + l, n + l + m)
    K[rows, ox:ox + n] = Jh
    rhs[rows] = Jh @ x - hx

    Ip_mu, Ip_nu = set(sets.Ip_mu), set(sets.Ip_nu)
    base = n + l + m
    for j in range(p):
        r = base + 2 * j
        if j in Ip_mu:
            K[r, ox:ox + n] = JG[j]
            rhs[r] = JG[j] @ x - Gx[j]
        else:
            K[r, om + j] = 1.0
        if j in Ip_nu:
            K[r + 1, ox:ox + n] = JH[j]
            rhs[r + 1] = JH[j] @ x - Hx[j]
        else:
            K[r + 1, on + j] = 1.0
    return LqSystem(sets, K, rhs)


def _factor(K: np.ndarray, rank_tol: float) -> Optional[Tuple[np.ndarray, np.ndarray]]:
    """LU factors of K, None when its reciprocal condition number is below rank_tol."""
    if K.shape[0] == 0:
        return K, np.zeros(0, dtype=np.int32)
    anorm = float(np.linalg.norm(K, 1))
    if not np.isfinite(anorm) or anorm == 0.0:
        return None
    lu, piv, info = lapack.dgetrf(K)
    if info > 0:
        return None
    rcond, _ = lapack.dgecon(lu, anorm, norm="1")
    if not float(rcond) >= rank_tol:
        return None
    return lu, piv


def uniquely_solvable(system: LqSystem, rank_tol: float = 1e-10) -> bool:
    return _factor(system.K, rank_tol) is not None


def sort_removal_candidates(problem: MpccProblem, z: PrimalDual, sets: IndexSets) -> List[Candidate]:
    x = z.x
    Gx, Hx = problem.G(x), problem.H(x)
    cands = [Candidate(SetTag.L1, i, float(z.lam[i])) for i in sets.Il1]
    cands += [Candidate(SetTag.P_MU, j, max(abs(z.mu[j]), abs(Hx[j]))) for j in sets.Ip_mu]
    cands += [Candidate(SetTag.P_NU, j, max(abs(z.nu[j]), abs(Gx[j]))) for j in sets.Ip_nu]
    return sorted(cands, key=lambda c: (c.key, c.tag, c.index))


def first_independent_prefix(problem: MpccProblem, z: PrimalDual, cands: Sequence[Candidate],
                             rank_tol: float = 1e-10) -> Optional[int]:
    """
    Smallest t such that the gradients of h and of the constraints behind cands[t:] are
    linearly independent, None when the gradients of h alone are not.

    With the rows ordered h first and the candidates last to first, the systems for t < t_min
    are the ones whose leading rows contain a dependent row, so one unpivoted QR of the
    transposed rows finds t_min: |R_kk| is the distance of row k from the span of the rows
    before it.
    """
    x = z.x
    Jh = problem.jacobian("h", x)
    grads = {
        SetTag.L1: problem.jacobian("g", x),
        SetTag.P_MU: problem.jacobian("G", x),
        SetTag.P_NU: problem.jacobian("H", x),
    }
    rows = np.vstack([Jh] + [grads[c.tag][c.index][None, :] for c in reversed(cands)])
    total, n = rows.shape
    m = Jh.shape[0]
    if total == 0:
        return 0
    R = scipy.linalg.qr(rows.T, mode="r")[0]
    diag = np.abs(np.diagonal(R))
    norms = np.linalg.norm(rows[:diag.size], axis=1)
    dependent = np.flatnonzero(diag <= rank_tol * norms)
    if dependent.size:
        first = int(dependent[0])
    elif total > n:
        first = n
    else:
        return 0
    if first < m:
        return None
    return len(cands) - (first - m)


def _solve(problem: MpccProblem, system: LqSystem, factors: Tuple[np.ndarray, np.ndarray]) -> PrimalDual:
    if system.K.size:
        sol, _ = lapack.dgetrs(*factors, system.rhs)
    else:
        sol = np.zeros(0)
    z = PrimalDual.from_vector(sol, problem.dims)
    sets = system.sets
    for s, values in ((sets.Il1, z.lam), (sets.Ip_mu, z.mu), (sets.Ip_nu, z.nu)):
        keep = np.zeros(values.size, dtype=bool)
        keep[list(s)] = True
        values[~keep] = 0.0
    return z


def repair_and_step(problem: MpccProblem, z: PrimalDual, partition: ActivePartition,
                    rank_tol: float = 1e-10) -> Optional[LqRepairResult]:
    """
    Remove candidates from the sets of the partition until the system above is uniquely
    solvable and return its solution. None when every candidate is gone and it still is not.

    Removals that leave the constraint gradients dependent are recorded without building
    their systems.
    """
    sets = IndexSets.from_partition(partition)
    history = [sets]
    removed: List[Candidate] = []
    system = build_lq_system(problem, z, sets)
    factors = _factor(system.K, rank_tol)
    if factors is not None:
        return LqRepairResult(_solve(problem, system, factors), sets, removed, history)

    cands = sort_removal_candidates(problem, z, sets)
    first = first_independent_prefix(problem, z, cands, rank_tol)
    if first is None:
        _log.info("linear-quadratic repair failed: equality constraint gradients are dependent")
        return None

    for k, cand in enumerate(cands, start=1):
        sets = sets.without(cand.tag, cand.index)
        removed.append(cand)
        history.append(sets)
        _log.debug("removed %s index %d (key %.3e)", cand.tag.name, cand.index, cand.key)
        if k < first:
            continue
        system = build_lq_system(problem, z, sets)
        factors = _factor(system.K, rank_tol)
        if factors is not None:
            _log.info("linear-quadratic repair succeeded after %d removal(s)", len(removed))
            return LqRepairResult(_solve(problem, system, factors), sets, removed, history)

    _log.info("linear-quadratic repair failed: all %d candidates removed", len(removed))
    return None
