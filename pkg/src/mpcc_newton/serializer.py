from __future__ import annotations
from typing import List

import numpy as np
import yaml

from .model import PrimalDual
from .parser import POINT_FIELDS
from .problem import BLOCKS, LinearQuadraticProblem


def _num(v: float) -> str:
    # repr round-trips a double exactly
    return repr(float(v))


def _vec(v: np.ndarray) -> str:
    return "[" + ", ".join(_num(t) for t in np.asarray(v).reshape(-1)) + "]"


def _write_matrix(out: List[str], key: str, M: np.ndarray, level: int) -> None:
    pad = "  " * level
    if M.shape[0] == 0:
        out.append(f"{pad}{key}: []")
        return
    out.append(f"{pad}{key}:")
    for row in M:
        out.append(f"{pad}  - {_vec(row)}")


def dump_lq_problem(problem: LinearQuadraticProblem) -> str:
    """Problem-file text that ProblemFileParser reads back to the same data."""
    n, l, m, p = problem.dims
    lines: List[str] = ["# linear-quadratic MPCC"]
    # quoted where YAML would read the bare name as a bool or number
    lines.append(yaml.safe_dump({"name": str(problem.name)}, default_flow_style=False, width=1 << 16).rstrip("\n"))
    lines += [f"n: {n}", f"l: {l}", f"m: {m}", f"p: {p}"]
    _write_matrix(lines, "Q", problem.Q, 0)
    lines.append(f"c: {_vec(problem.c)}")
    lines.append(f"c0: {_num(problem.c0)}")
    for key in BLOCKS:
        amap = problem.blocks[key]
        lines.append(f"{key}:")
        _write_matrix(lines, "A", amap.A, 1)
        lines.append(f"  b: {_vec(amap.b)}")
    if problem.reference_x is not None:
        lines.append(f"reference_x: {_vec(problem.reference_x)}")
    return "\n".join(lines) + "\n"


def dump_point(z: PrimalDual) -> str:
    return "\n".join(f"{key}: {_vec(getattr(z, key))}" for key in POINT_FIELDS) + "\n"
