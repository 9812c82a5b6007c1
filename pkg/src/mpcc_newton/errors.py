from __future__ import annotations
from typing import Optional


class MpccError(Exception):
    pass


class DimensionError(MpccError, ValueError):
    pass


class ConfigError(MpccError, ValueError):
    pass


class EnumerationLimitError(MpccError):
    pass


class ProblemFormatError(MpccError, ValueError):
    """Unreadable problem, point or options file; carries where it went wrong."""

    def __init__(self, message: str, path: Optional[str] = None, field: Optional[str] = None,
                 line: Optional[int] = None):
        self.message = message
        self.path = path
        self.field = field
        self.line = line
        super().__init__(str(self))

    def __str__(self) -> str:
        where = []
        if self.path:
            where.append(str(self.path))
        if self.line is not None:
            where.append(f"line {self.line}")
        if self.field:
            where.append(f"field '{self.field}'")
        if where:
            return f"{', '.join(where)}: {self.message}"
        return self.message
