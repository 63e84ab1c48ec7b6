"""Shared exception types."""

from __future__ import annotations


class MtssError(Exception):
    """Base class for all toolkit errors."""


class DataError(MtssError):
    """Invalid or inconsistent input data. The CLI maps this to exit code 2."""

    def __init__(self, message: str, *, path=None, line: int | None = None):
        self.path = str(path) if path is not None else None
        self.line = line
        super().__init__(message)

    def __str__(self) -> str:
        msg = super().__str__()
        parts = []
        if self.path is not None:
            parts.append(f"file: {self.path}")
        if self.line is not None:
            parts.append(f"line: {self.line}")
        if parts:
            return f"{msg} ({', '.join(parts)})"
        return msg
