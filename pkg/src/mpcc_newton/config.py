from __future__ import annotations
import dataclasses
from typing import Any, Dict, Optional

import yaml

from .errors import ConfigError, ProblemFormatError
from .solver import SolveOptions


def _coerce(name: str, default: Any, value: Any) -> Any:
    if isinstance(default, str):
        if not isinstance(value, str):
            raise ConfigError(f"option '{name}' expects a string, got {value!r}")
        return value
    if isinstance(default, bool):
        if not isinstance(value, bool):
            raise ConfigError(f"option '{name}' expects true/false, got {value!r}")
        return value
    if isinstance(default, int):
        if isinstance(value, bool) or not isinstance(value, int):
            raise ConfigError(f"option '{name}' expects an integer, got {value!r}")
        return value
    if isinstance(value, bool):
        raise ConfigError(f"option '{name}' expects a number, got {value!r}")
    try:
        # 1e-9 style literals arrive as strings from YAML
        return float(value)
    except (TypeError, ValueError):
        raise ConfigError(f"option '{name}' expects a number, got {value!r}") from None


def options_from_mapping(data: Dict[str, Any], base: Optional[SolveOptions] = None) -> SolveOptions:
    base = base or SolveOptions()
    defaults = {f.name: getattr(base, f.name) for f in dataclasses.fields(base)}
    unknown = set(data) - set(defaults)
    if unknown:
        raise ConfigError(f"unknown solver option(s): {', '.join(sorted(map(str, unknown)))}")
    changes = {key: _coerce(key, defaults[key], value) for key, value in data.items()}
    return base.replace(**changes)


def load_options(path: str, base: Optional[SolveOptions] = None) -> SolveOptions:
    """Solver options from a YAML mapping of overrides, e.g. ``tau_abs: 1e-10``."""
    try:
        with open(path, "r", encoding="utf-8") as f:
            data = yaml.safe_load(f)
    except yaml.YAMLError as exc:
        mark = getattr(exc, "problem_mark", None)
        raise ProblemFormatError("not valid YAML", str(path),
                                 line=mark.line + 1 if mark is not None else None) from exc
    if data is None:
        return base or SolveOptions()
    if not isinstance(data, dict):
        raise ConfigError(f"{path}: options file must be a mapping")
    return options_from_mapping(data, base)
