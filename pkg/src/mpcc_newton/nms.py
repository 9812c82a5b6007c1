"""
Scalar complementarity functions and the nonlinear M-stationarity (NMS) function phi.

A point w = (a, b, mu, nu) collects the values G_i(x), H_i(x) and the multipliers mu_i, nu_i
of one complementarity pair. phi(w) = 0 holds exactly on the M-stationarity set

    M = {a >= 0, b = mu = 0} u {b >= 0, a = nu = 0} u {a = b = 0, mu <= 0, nu <= 0}.

Newton derivatives follow fixed conventions: min/max differentiate with respect to the first
argument attaining the extremum, and D|x| = +1 for x >= 0, -1 otherwise. All comparisons are
exact; phi_2 is discontinuous on purpose and the derivative rows must select exactly the
component that produced each value.
"""
from __future__ import annotations
from dataclasses import dataclass
from enum import Enum
from typing import List, NamedTuple, Tuple

import numpy as np

# coordinate numbers of (a, b, mu, nu) used by SignedUnit.index
A, B, MU, NU = 1, 2, 3, 4

_FB_LOWER = 2.0 / (2.0 + np.sqrt(2.0))
_FB_UPPER = 2.0 + np.sqrt(2.0)


class Quad(NamedTuple):
    a: float
    b: float
    mu: float
    nu: float


class JClass(str, Enum):
    J12 = "J12"
    J23 = "J23"
    J14 = "J14"


_JCLASS_OF = {
    frozenset((A, B)): JClass.J12,
    frozenset((B, MU)): JClass.J23,
    frozenset((A, NU)): JClass.J14,
}


@dataclass(frozen=True)
class SignedUnit:
    """The row sign * e_index^T of a 2x4 NMS derivative."""

    index: int
    sign: int

    def __post_init__(self) -> None:
        if self.index not in (A, B, MU, NU):
            raise ValueError(f"unit row index must be in 1..4, got {self.index}")
        if self.sign not in (1, -1):
            raise ValueError(f"unit row sign must be +1 or -1, got {self.sign}")

    def row(self) -> np.ndarray:
        r = np.zeros(4)
        r[self.index - 1] = self.sign
        return r

    def apply(self, w) -> float:
        return self.sign * float(w[self.index - 1])

    def __str__(self) -> str:
        return f"{'+' if self.sign > 0 else '-'}e{self.index}"


@dataclass(frozen=True)
class DerivPattern:
    row1: SignedUnit
    row2: SignedUnit
    jclass: JClass

    def matrix(self) -> np.ndarray:
        return np.vstack([self.row1.row(), self.row2.row()])

    def apply(self, dw) -> Tuple[float, float]:
        return (self.row1.apply(dw), self.row2.apply(dw))


@dataclass(frozen=True)
class NmsEval:
    phi: Tuple[float, float]
    deriv: DerivPattern


# a candidate term: its value and the signed unit row that reproduces it
_Term = Tuple[float, SignedUnit]


def _abs_term(v: float, index: int) -> _Term:
    return (abs(v), SignedUnit(index, 1 if v >= 0 else -1))


def _lin_term(v: float, index: int, sign: int) -> _Term:
    return (sign * v, SignedUnit(index, sign))


def _first_max(terms: List[_Term]) -> _Term:
    best = terms[0]
    for t in terms[1:]:
        if t[0] > best[0]:
            best = t
    return best


def _first_min(terms: List[_Term]) -> _Term:
    best = terms[0]
    for t in terms[1:]:
        if t[0] < best[0]:
            best = t
    return best


def ncp_min(a: float, b: float) -> Tuple[float, Tuple[float, float]]:
    """min(a, b) and its Newton derivative; ties go to the first argument."""
    if a <= b:
        return a, (1.0, 0.0)
    return b, (0.0, 1.0)


def ncp_fb(a: float, b: float) -> float:
    return float(np.hypot(a, b)) - a - b


def psi(w) -> Tuple[float, float, float]:
    a, b, mu, nu = w
    return (
        max(-a, abs(b), abs(mu)),
        max(-b, abs(a), abs(nu)),
        max(abs(a), abs(b), mu, nu),
    )


def phi_eval(w) -> NmsEval:
    a, b, mu, nu = (float(v) for v in w)

    # psi_1, psi_2, psi_3 in this order; the order decides D phi_1 at ties
    psi_best = [
        _first_max([_lin_term(a, A, -1), _abs_term(b, B), _abs_term(mu, MU)]),
        _first_max([_lin_term(b, B, -1), _abs_term(a, A), _abs_term(nu, NU)]),
        _first_max([_abs_term(a, A), _abs_term(b, B), _lin_term(mu, MU, 1), _lin_term(nu, NU, 1)]),
    ]
    phi1, row1 = _first_min(psi_best)

    if row1.index == A:
        phi2, row2 = _first_min([_abs_term(b, B), _abs_term(nu, NU)])
    elif row1.index == B:
        phi2, row2 = _first_min([_abs_term(a, A), _abs_term(mu, MU)])
    elif row1.index == MU:
        phi2, row2 = _abs_term(b, B)
    else:
        phi2, row2 = _abs_term(a, A)

    jclass = _JCLASS_OF[frozenset((row1.index, row2.index))]
    # + 0.0 turns a selected -0.0 into 0.0
    return NmsEval((phi1 + 0.0, phi2 + 0.0), DerivPattern(row1, row2, jclass))


def theta(w) -> Tuple[float, float, float, float]:
    a, b, mu, nu = w
    return (
        abs(min(a, b)),
        min(abs(a), abs(mu)),
        min(abs(b), abs(nu)),
        max(0.0, min(mu, abs(nu)), min(nu, abs(mu))),
    )


def theta_fb(w) -> Tuple[float, float, float, float]:
    a, b, mu, nu = w
    if mu <= 0 and nu <= 0:
        t4 = 0.0
    else:
        t4 = ncp_fb(abs(mu), abs(nu))
    return (
        abs(ncp_fb(a, b)),
        ncp_fb(abs(a), abs(mu)),
        ncp_fb(abs(b), abs(nu)),
        t4,
    )


def dist_to_M(w) -> float:
    """l-infinity distance to M from the three closed-form piece distances."""
    a, b, mu, nu = w
    return min(
        max(0.0, -a, abs(b), abs(mu)),
        max(0.0, -b, abs(a), abs(nu)),
        max(abs(a), abs(b), max(mu, 0.0), max(nu, 0.0)),
    )


def in_M(w) -> bool:
    a, b, mu, nu = w
    return (
        a >= 0 and b >= 0 and a * b == 0
        and a * mu == 0 and b * nu == 0
        and (mu * nu == 0 or (mu < 0 and nu < 0))
    )


def fb_min_bounds() -> Tuple[float, float]:
    """Constants c, C with c|min(a,b)| <= |pi_FB(a,b)| <= C|min(a,b)|."""
    return _FB_LOWER, _FB_UPPER
