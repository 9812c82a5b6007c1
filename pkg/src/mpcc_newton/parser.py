from __future__ import annotations
import logging
from typing import Any, Dict, List, Optional

import numpy as np
import yaml

from .errors import DimensionError, ProblemFormatError
from .model import Dims, PrimalDual
from .problem import BLOCKS, AffineMap, LinearQuadraticProblem

_log = logging.getLogger(__name__)

POINT_FIELDS = ("x", "lam", "eta", "mu", "nu")


class ProblemFileParser:
    """
    Reader for the linear-quadratic problem format: a YAML (or JSON) mapping with
    n, l, m, p, Q, c, c0 and blocks g, h, G, H, each holding A (rows x n) and b (rows).

    YAML 1.1 leaves numbers such as 1e-5 as strings, so every numeric leaf goes through float().
    """

    def __init__(self, source: Optional[str] = None):
        self.source = source
        self._lines: Dict[str, int] = {}

    def parse(self, text: str) -> LinearQuadraticProblem:
        data = self._load(text)
        if not isinstance(data, dict):
            raise self._error("top level must be a mapping")
        n, l, m, p = (self._int(data, key) for key in ("n", "l", "m", "p"))

        Q = self._matrix(data.get("Q", []), n, n, "Q")
        c = self._vector(data.get("c", []), n, "c")
        c0 = self._scalar(data.get("c0", 0.0), "c0")
        symmetrized = False
        if not np.array_equal(Q, Q.T):
            _log.warning("%s: Q is not symmetric, using (Q + Q^T)/2", self.source or "<text>")
            Q = 0.5 * (Q + Q.T)
            symmetrized = True

        rows = {"g": l, "h": m, "G": p, "H": p}
        blocks = {}
        for key in BLOCKS:
            block = data.get(key) or {}
            if not isinstance(block, dict):
                raise self._error("block must be a mapping with A and b", key)
            A = self._matrix(block.get("A", []), rows[key], n, f"{key}.A")
            b = self._vector(block.get("b", []), rows[key], f"{key}.b")
            blocks[key] = AffineMap(A, b)

        name = str(data.get("name", "lq"))
        ref = data.get("reference_x")
        ref = None if ref is None else self._vector(ref, n, "reference_x")
        return LinearQuadraticProblem(Q, c, c0, blocks, name=name, reference_x=ref,
                                      symmetrized=symmetrized)

    def parse_point(self, text: str, dims: Optional[Dims] = None) -> PrimalDual:
        data = self._load(text)
        if not isinstance(data, dict):
            raise self._error("point file must be a mapping")
        if "lambda" in data and "lam" not in data:
            data["lam"] = data.pop("lambda")
        unknown = set(data) - set(POINT_FIELDS)
        if unknown:
            raise self._error(f"unknown field(s) {sorted(unknown)}")
        vecs = []
        for key in POINT_FIELDS:
            value = data.get(key) or []
            if not isinstance(value, list):
                value = [value]
            vecs.append(np.array([self._scalar(v, key) for v in value], dtype=float))
        z = PrimalDual(*vecs)
        if dims is not None:
            z.check_dims(dims)
        return z

    # helpers

    def _load(self, text: str) -> Any:
        try:
            node = yaml.compose(text, Loader=yaml.SafeLoader)
            data = yaml.safe_load(text)
        except yaml.YAMLError as exc:
            mark = getattr(exc, "problem_mark", None)
            line = mark.line + 1 if mark is not None else None
            raise ProblemFormatError(f"not valid YAML/JSON ({getattr(exc, 'problem', exc)})",
                                     self.source, line=line) from exc
        self._lines = {}
        self._index_lines(node, "")
        return data

    def _index_lines(self, node, prefix: str) -> None:
        if not isinstance(node, yaml.MappingNode):
            return
        for key_node, value_node in node.value:
            path = f"{prefix}{key_node.value}"
            self._lines[path] = key_node.start_mark.line + 1
            self._index_lines(value_node, path + ".")

    def _error(self, message: str, field: Optional[str] = None) -> ProblemFormatError:
        line = self._lines.get(field) if field else None
        if line is None and field and "." in field:
            line = self._lines.get(field.split(".")[0])
        return ProblemFormatError(message, self.source, field, line)

    def _scalar(self, value: Any, field: str) -> float:
        if isinstance(value, bool):
            raise self._error(f"expected a number, got {value!r}", field)
        try:
            return float(value)
        except (TypeError, ValueError):
            raise self._error(f"expected a number, got {value!r}", field) from None

    def _int(self, data: Dict[str, Any], key: str) -> int:
        if key not in data:
            raise self._error("missing dimension", key)
        value = data[key]
        if isinstance(value, bool) or not isinstance(value, int) or value < 0:
            raise self._error(f"expected a nonnegative integer, got {value!r}", key)
        return value

    def _vector(self, value: Any, size: int, field: str) -> np.ndarray:
        if value is None:
            value = []
        if not isinstance(value, list):
            raise self._error("expected a list", field)
        vec = np.array([self._scalar(v, field) for v in value], dtype=float)
        if vec.size != size:
            raise DimensionError(f"{self.source or '<text>'}, field '{field}': "
                                 f"{vec.size} entries, expected {size}")
        return vec

    def _matrix(self, value: Any, rows: int, cols: int, field: str) -> np.ndarray:
        if value is None:
            value = []
        if not isinstance(value, list):
            raise self._error("expected a list of rows", field)
        if len(value) != rows:
            raise DimensionError(f"{self.source or '<text>'}, field '{field}': "
                                 f"{len(value)} rows, expected {rows}")
        out: List[np.ndarray] = []
        for row in value:
            if not isinstance(row, list):
                raise self._error("expected a list of rows", field)
            out.append(self._vector(row, cols, field))
        return np.array(out, dtype=float).reshape(rows, cols)


def load_lq_problem(path: str) -> LinearQuadraticProblem:
    with open(path, "r", encoding="utf-8") as f:
        text = f.read()
    return ProblemFileParser(str(path)).parse(text)


def load_point(path: str, dims: Optional[Dims] = None) -> PrimalDual:
    """Point file: mapping with x, lam (or lambda), eta, mu, nu as decimal lists."""
    with open(path, "r", encoding="utf-8") as f:
        text = f.read()
    return ProblemFileParser(str(path)).parse_point(text, dims)
