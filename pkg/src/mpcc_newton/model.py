from __future__ import annotations
from dataclasses import dataclass, field
from typing import Dict, Tuple

import numpy as np

from .errors import DimensionError

Dims = Tuple[int, int, int, int]


def _vec(v) -> np.ndarray:
    return np.array(v, dtype=float).reshape(-1)


@dataclass(eq=False)
class PrimalDual:
    """The stacked iterate z = (x, lambda, eta, mu, nu)."""

    x: np.ndarray
    lam: np.ndarray
    eta: np.ndarray
    mu: np.ndarray
    nu: np.ndarray

    def __post_init__(self) -> None:
        self.x = _vec(self.x)
        self.lam = _vec(self.lam)
        self.eta = _vec(self.eta)
        self.mu = _vec(self.mu)
        self.nu = _vec(self.nu)
        if self.mu.size != self.nu.size:
            raise DimensionError(f"mu has {self.mu.size} entries but nu has {self.nu.size}")

    @property
    def dims(self) -> Dims:
        return (self.x.size, self.lam.size, self.eta.size, self.mu.size)

    @property
    def size(self) -> int:
        n, l, m, p = self.dims
        return n + l + m + 2 * p

    def check_dims(self, dims: Dims) -> None:
        if self.dims != tuple(dims):
            raise DimensionError(f"point has dimensions (n,l,m,p)={self.dims}, expected {tuple(dims)}")

    def stack(self) -> np.ndarray:
        return np.concatenate([self.x, self.lam, self.eta, self.mu, self.nu])

    def copy(self) -> "PrimalDual":
        return PrimalDual(self.x.copy(), self.lam.copy(), self.eta.copy(), self.mu.copy(), self.nu.copy())

    @classmethod
    def from_vector(cls, vec, dims: Dims) -> "PrimalDual":
        n, l, m, p = dims
        vec = _vec(vec)
        if vec.size != n + l + m + 2 * p:
            raise DimensionError(f"vector of length {vec.size} does not split into (n,l,m,p)={tuple(dims)}")
        cuts = np.cumsum([n, l, m, p])
        x, lam, eta, mu, nu = np.split(vec, cuts)
        return cls(x, lam, eta, mu, nu)

    @classmethod
    def zeros(cls, dims: Dims) -> "PrimalDual":
        n, l, m, p = dims
        return cls(np.zeros(n), np.zeros(l), np.zeros(m), np.zeros(p), np.zeros(p))


@dataclass(frozen=True)
class LagrangianEval:
    value: float
    grad_x: np.ndarray
    hess_xx: np.ndarray


@dataclass(frozen=True)
class IndexPartition:
    """Index sets of a (nearly) feasible point and its multipliers, 0-based."""

    Ig: Tuple[int, ...]
    I_plus0: Tuple[int, ...]
    I_0plus: Tuple[int, ...]
    I_00: Tuple[int, ...]
    Ig_plus: Tuple[int, ...]
    I00_pmR: Tuple[int, ...]
    I00_Rpm: Tuple[int, ...]
    I00_00: Tuple[int, ...]


@dataclass(frozen=True)
class RunRecord:
    """One seeded solver run of a batch; err is nan when no reference solution is known."""

    run: int
    seed: int
    status: str
    iterations: int
    resid: float
    merit_grad: float
    err: float
    label: str
    ms: float
    message: str = ""


@dataclass(frozen=True)
class Summary:
    problem: str
    runs: int
    converged: int
    stationary: int
    errors: int
    mean_iterations: float
    median_iterations: float
    mean_error: float
    mean_ms: float
    status_counts: Dict[str, int] = field(default_factory=dict)
    label_counts: Dict[str, int] = field(default_factory=dict)
