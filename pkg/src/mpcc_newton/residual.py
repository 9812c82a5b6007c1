"""
The M-stationarity residual

    F(z) = (grad_x L(z); min(-g_i(x), lam_i); h(x); phi(G_i(x), H_i(x), mu_i, nu_i))

with the NMS block interleaved per pair as (phi_1i, phi_2i), and its Newton derivative DF(z).
Columns of DF follow the stacking of z: x, lam, eta, mu, nu.
"""
from __future__ import annotations
from dataclasses import dataclass
from typing import Tuple

import numpy as np

from .model import Dims, LagrangianEval, PrimalDual
from .nms import A, B, MU, NU, DerivPattern, JClass, ncp_min, phi_eval
from .problem import MpccProblem, lagrangian


@dataclass(frozen=True)
class ResidualEval:
    F: np.ndarray
    dims: Dims
    ncp_derivs: Tuple[Tuple[float, float], ...]
    patterns: Tuple[DerivPattern, ...]
    lagrangian: LagrangianEval

    def _slice(self, start: int, length: int) -> np.ndarray:
        return self.F[start:start + length]

    @property
    def grad_L(self) -> np.ndarray:
        return self._slice(0, self.dims[0])

    @property
    def ncp_g(self) -> np.ndarray:
        n, l, _, _ = self.dims
        return self._slice(n, l)

    @property
    def h(self) -> np.ndarray:
        n, l, m, _ = self.dims
        return self._slice(n + l, m)

    @property
    def nms(self) -> np.ndarray:
        n, l, m, p = self.dims
        return self._slice(n + l + m, 2 * p)

    def norm(self) -> float:
        return float(np.linalg.norm(self.F))

    def norm_inf(self) -> float:
        return float(np.linalg.norm(self.F, np.inf)) if self.F.size else 0.0


@dataclass(frozen=True)
class NewtonMatrix:
    DF: np.ndarray
    dims: Dims


@dataclass(frozen=True)
class ActivePartition:
    """Index sets read off the derivative patterns, 0-based."""

    Il1: Tuple[int, ...]
    Ip12: Tuple[int, ...]
    Ip23: Tuple[int, ...]
    Ip14: Tuple[int, ...]
    p: int

    @property
    def Ip_mu(self) -> Tuple[int, ...]:
        skip = set(self.Ip23)
        return tuple(j for j in range(self.p) if j not in skip)

    @property
    def Ip_nu(self) -> Tuple[int, ...]:
        skip = set(self.Ip14)
        return tuple(j for j in range(self.p) if j not in skip)


def offsets(dims: Dims) -> Tuple[int, int, int, int, int]:
    """Start of the x, lam, eta, mu and nu blocks in the stacked z (and of the F row blocks)."""
    n, l, m, p = dims
    return 0, n, n + l, n + l + m, n + l + m + p


def assemble_F(problem: MpccProblem, z: PrimalDual) -> ResidualEval:
    dims = problem.dims
    z.check_dims(dims)
    x = z.x
    lag = lagrangian(problem, z)
    gx, hx, Gx, Hx = problem.g(x), problem.h(x), problem.G(x), problem.H(x)

    ncp_vals, ncp_derivs = [], []
    for gi, li in zip(gx, z.lam):
        value, deriv = ncp_min(-float(gi), float(li))
        ncp_vals.append(value)
        ncp_derivs.append(deriv)

    nms_vals, patterns = [], []
    for w in zip(Gx, Hx, z.mu, z.nu):
        ev = phi_eval(w)
        nms_vals.extend(ev.phi)
        patterns.append(ev.deriv)

    F = np.concatenate([lag.grad_x, np.array(ncp_vals, dtype=float), np.asarray(hx, dtype=float),
                        np.array(nms_vals, dtype=float)])
    return ResidualEval(F, dims, tuple(ncp_derivs), tuple(patterns), lag)


def assemble_DF(problem: MpccProblem, z: PrimalDual, ev: ResidualEval) -> NewtonMatrix:
    n, l, m, p = dims = problem.dims
    x = z.x
    Jg, Jh, JG, JH = (problem.jacobian(b, x) for b in ("g", "h", "G", "H"))
    ox, ol, oe, om, on = offsets(dims)
    N = n + l + m + 2 * p
    DF = np.zeros((N, N))

    DF[:n, ox:ox + n] = ev.lagrangian.hess_xx
    DF[:n, ol:ol + l] = Jg.T
    DF[:n, oe:oe + m] = Jh.T
    DF[:n, om:om + p] = JG.T
    DF[:n, on:on + p] = JH.T

    for i, (da, db) in enumerate(ev.ncp_derivs):
        r = n + i
        DF[r, ox:ox + n] = -da * Jg[i]
        DF[r, ol + i] = db

    DF[n + l:n + l + m, ox:ox + n] = Jh

    base = n + l + m
    for i, pat in enumerate(ev.patterns):
        for k, unit in enumerate((pat.row1, pat.row2)):
            r = base + 2 * i + k
            if unit.index == A:
                DF[r, ox:ox + n] = unit.sign * JG[i]
            elif unit.index == B:
                DF[r, ox:ox + n] = unit.sign * JH[i]
            elif unit.index == MU:
                DF[r, om + i] = unit.sign
            else:
                DF[r, on + i] = unit.sign
    return NewtonMatrix(DF, dims)


def extract_partition(ev: ResidualEval) -> ActivePartition:
    Il1 = tuple(i for i, d in enumerate(ev.ncp_derivs) if d == (1.0, 0.0))
    by_class = {cls: [] for cls in JClass}
    for i, pat in enumerate(ev.patterns):
        by_class[pat.jclass].append(i)
    return ActivePartition(
        Il1=Il1,
        Ip12=tuple(by_class[JClass.J12]),
        Ip23=tuple(by_class[JClass.J23]),
        Ip14=tuple(by_class[JClass.J14]),
        p=len(ev.patterns),
    )
