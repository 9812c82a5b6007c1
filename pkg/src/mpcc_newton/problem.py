"""
MPCC problem data.

    min f(x)  s.t.  g(x) <= 0,  h(x) = 0,  0 <= G(x) _|_ H(x) >= 0

with dims n (variables), l (inequalities), m (equalities), p (complementarity pairs).
"""
from __future__ import annotations
import abc
from dataclasses import dataclass
from itertools import product
from typing import Dict, Iterator, Optional, Sequence, Tuple

import numpy as np
import scipy.linalg

from .errors import ConfigError, DimensionError
from .model import Dims, LagrangianEval, PrimalDual

BLOCKS = ("g", "h", "G", "H")


class MpccProblem(abc.ABC):
    """Evaluation contract. Implementations must be reentrant and free of side effects."""

    name: str = "mpcc"
    affine_constraints: bool = False
    quadratic_objective: bool = False
    reference_x: Optional[np.ndarray] = None

    @property
    @abc.abstractmethod
    def dims(self) -> Dims:
        ...

    @property
    def is_linear_quadratic(self) -> bool:
        return self.affine_constraints and self.quadratic_objective

    @abc.abstractmethod
    def f(self, x: np.ndarray) -> float:
        ...

    @abc.abstractmethod
    def grad_f(self, x: np.ndarray) -> np.ndarray:
        ...

    @abc.abstractmethod
    def hess_f(self, x: np.ndarray) -> np.ndarray:
        ...

    @abc.abstractmethod
    def constraint(self, block: str, x: np.ndarray) -> np.ndarray:
        """Values of block 'g', 'h', 'G' or 'H' at x."""

    @abc.abstractmethod
    def jacobian(self, block: str, x: np.ndarray) -> np.ndarray:
        ...

    def hessians(self, block: str, x: np.ndarray) -> np.ndarray:
        """Stacked Hessians of the block's components, shape (rows, n, n)."""
        if self.affine_constraints:
            n = self.dims[0]
            return np.zeros((self.block_size(block), n, n))
        raise NotImplementedError(f"{type(self).__name__} must provide Hessians of block '{block}'")

    def block_size(self, block: str) -> int:
        n, l, m, p = self.dims
        return {"g": l, "h": m, "G": p, "H": p}[block]

    # shorthands used throughout the solver
    def g(self, x):
        return self.constraint("g", x)

    def h(self, x):
        return self.constraint("h", x)

    def G(self, x):
        return self.constraint("G", x)

    def H(self, x):
        return self.constraint("H", x)


@dataclass(frozen=True)
class AffineMap:
    """x -> A x + b."""

    A: np.ndarray
    b: np.ndarray

    def __call__(self, x: np.ndarray) -> np.ndarray:
        return self.A @ x + self.b

    @property
    def rows(self) -> int:
        return self.A.shape[0]


class LinearQuadraticProblem(MpccProblem):
    """f(x) = 1/2 x^T Q x + c^T x + c0 with affine g, h, G, H."""

    affine_constraints = True
    quadratic_objective = True

    def __init__(self, Q, c, c0: float, blocks: Dict[str, AffineMap], name: str = "lq",
                 reference_x=None, symmetrized: bool = False):
        self.Q = np.array(Q, dtype=float, ndmin=2)
        self.c = np.array(c, dtype=float).reshape(-1)
        self.c0 = float(c0)
        self.name = name
        self.symmetrized = symmetrized
        self.reference_x = None if reference_x is None else np.array(reference_x, dtype=float)
        n = self.c.size
        if n == 0 and self.Q.size == 0:
            self.Q = np.zeros((0, 0))
        if self.Q.shape != (n, n):
            raise DimensionError(f"Q has shape {self.Q.shape}, expected ({n}, {n})")
        self.blocks: Dict[str, AffineMap] = {}
        for key in BLOCKS:
            amap = blocks.get(key)
            if amap is None:
                amap = AffineMap(np.zeros((0, n)), np.zeros(0))
            A = np.array(amap.A, dtype=float).reshape(-1, n) if np.size(amap.A) else np.zeros((0, n))
            b = np.array(amap.b, dtype=float).reshape(-1)
            if A.shape[0] != b.size:
                raise DimensionError(f"block {key}: A has {A.shape[0]} rows but b has {b.size} entries")
            self.blocks[key] = AffineMap(A, b)
        if self.blocks["G"].rows != self.blocks["H"].rows:
            raise DimensionError(
                f"G has {self.blocks['G'].rows} rows but H has {self.blocks['H'].rows}")

    @property
    def dims(self) -> Dims:
        return (self.c.size, self.blocks["g"].rows, self.blocks["h"].rows, self.blocks["G"].rows)

    def f(self, x):
        return float(0.5 * x @ self.Q @ x + self.c @ x + self.c0)

    def grad_f(self, x):
        return self.Q @ x + self.c

    def hess_f(self, x):
        return self.Q

    def constraint(self, block, x):
        return self.blocks[block](x)

    def jacobian(self, block, x):
        return self.blocks[block].A


def lagrangian(problem: MpccProblem, z: PrimalDual) -> LagrangianEval:
    """Value, gradient and Hessian in x of L = f + lam^T g + eta^T h + mu^T G + nu^T H."""
    z.check_dims(problem.dims)
    x = z.x
    mults = {"g": z.lam, "h": z.eta, "G": z.mu, "H": z.nu}
    value = problem.f(x)
    grad = np.array(problem.grad_f(x), dtype=float)
    hess = np.array(problem.hess_f(x), dtype=float)
    for block, y in mults.items():
        if y.size == 0:
            continue
        value += float(y @ problem.constraint(block, x))
        grad = grad + problem.jacobian(block, x).T @ y
        if not problem.affine_constraints:
            hess = hess + np.tensordot(y, problem.hessians(block, x), axes=1)
    return LagrangianEval(value, grad, hess)


# --- built-in problems -------------------------------------------------------

def toy(c: float = 0.1) -> LinearQuadraticProblem:
    """f = x1 + x2 - x3 + c/2 |x|^2, g = (-4x1 + x3, -4x2 + x3), G = x1, H = x2."""
    if not c > 0:
        raise ConfigError(f"toy problem needs c > 0, got {c}")
    blocks = {
        "g": AffineMap(np.array([[-4.0, 0.0, 1.0], [0.0, -4.0, 1.0]]), np.zeros(2)),
        "G": AffineMap(np.array([[1.0, 0.0, 0.0]]), np.zeros(1)),
        "H": AffineMap(np.array([[0.0, 1.0, 0.0]]), np.zeros(1)),
    }
    return LinearQuadraticProblem(c * np.eye(3), [1.0, 1.0, -1.0], 0.0, blocks,
                                  name="toy", reference_x=np.zeros(3))


def perturbed(eps: float = 0.2) -> LinearQuadraticProblem:
    """f = 1/2 |x - (1, -eps)|^2 with 0 <= x1 _|_ x2 >= 0."""
    if not eps >= 0:
        raise ConfigError(f"perturbed problem needs eps >= 0, got {eps}")
    target = np.array([1.0, -eps])
    blocks = {
        "G": AffineMap(np.array([[1.0, 0.0]]), np.zeros(1)),
        "H": AffineMap(np.array([[0.0, 1.0]]), np.zeros(1)),
    }
    return LinearQuadraticProblem(np.eye(2), -target, 0.5 * float(target @ target), blocks,
                                  name="perturbed", reference_x=np.array([1.0, 0.0]))


def laplacian_1d(N: int) -> np.ndarray:
    return 2.0 * np.eye(N) - np.eye(N, k=1) - np.eye(N, k=-1)


def obstacle(N: int) -> LinearQuadraticProblem:
    """Discretized obstacle control problem in x = (y, u, xi)."""
    N = int(N)
    if N < 1:
        raise ConfigError(f"obstacle problem needs N >= 1, got {N}")
    I, Z = np.eye(N), np.zeros((N, N))
    Q = scipy.linalg.block_diag(I, I, Z)
    c = np.concatenate([np.ones(N), np.zeros(2 * N)])
    blocks = {
        "g": AffineMap(np.hstack([Z, -I, Z]), np.zeros(N)),
        "h": AffineMap(np.hstack([laplacian_1d(N), -I, I]), np.zeros(N)),
        "G": AffineMap(np.hstack([-I, Z, Z]), np.zeros(N)),
        "H": AffineMap(np.hstack([Z, Z, I]), np.zeros(N)),
    }
    return LinearQuadraticProblem(Q, c, 0.0, blocks, name="obstacle", reference_x=np.zeros(3 * N))


_BUILTINS = {"toy": toy, "perturbed": perturbed, "obstacle": obstacle}
_PARAM_NAMES = {"toy": ("c",), "perturbed": ("eps",), "obstacle": ("N",)}


def builtin_names() -> Tuple[str, ...]:
    return tuple(_BUILTINS)


def builtin(name: str, **params) -> LinearQuadraticProblem:
    if name not in _BUILTINS:
        raise ConfigError(f"unknown built-in problem '{name}' (choose from {', '.join(_BUILTINS)})")
    unknown = set(params) - set(_PARAM_NAMES[name])
    if unknown:
        raise ConfigError(f"problem '{name}' takes no parameter(s) {sorted(unknown)}")
    return _BUILTINS[name](**params)


def toy_multipliers(alternative: bool = False) -> Tuple[np.ndarray, np.ndarray, np.ndarray]:
    """(lam, mu, nu) making x = 0 M-stationary for the toy problem."""
    if alternative:
        return np.array([0.25, 0.75]), np.array([0.0]), np.array([2.0])
    return np.array([0.75, 0.25]), np.array([2.0]), np.array([0.0])


def obstacle_multipliers(N: int, d: Sequence[int]) -> PrimalDual:
    """
    Root (0, lam, eta, mu, nu) of the obstacle problem for a 0/1 diagonal d, from
    [[A, I], [I - D, D]] (nu, mu) = (e, 0) and nu = -eta = lam.
    """
    d = np.asarray(d, dtype=float).reshape(-1)
    if d.size != N or not np.all((d == 0) | (d == 1)):
        raise ConfigError(f"d must be a 0/1 vector of length {N}")
    D = np.diag(d)
    I = np.eye(N)
    K = np.block([[laplacian_1d(N), I], [I - D, D]])
    sol = np.linalg.solve(K, np.concatenate([np.ones(N), np.zeros(N)]))
    nu, mu = sol[:N], sol[N:]
    # exact zeros where the second block row forces them
    mu[d == 1] = 0.0
    nu[d == 0] = 0.0
    return PrimalDual(np.zeros(3 * N), nu.copy(), -nu, mu, nu.copy())


def obstacle_family(N: int) -> Iterator[Tuple[Tuple[int, ...], PrimalDual]]:
    for d in product((0, 1), repeat=N):
        yield d, obstacle_multipliers(N, d)


def reference_point(problem: MpccProblem) -> Optional[PrimalDual]:
    """A known primal-dual root of a built-in problem, None for other problems."""
    if problem.name == "toy":
        lam, mu, nu = toy_multipliers()
        return PrimalDual(np.zeros(3), lam, np.zeros(0), mu, nu)
    if problem.name == "perturbed":
        # c = (-1, eps)
        eps = float(problem.c[1])
        return PrimalDual([1.0, 0.0], np.zeros(0), np.zeros(0), [0.0], [-eps])
    if problem.name == "obstacle":
        N = problem.dims[3]
        return obstacle_multipliers(N, np.ones(N, dtype=int))
    return None
