"""Exception hierarchy shared by every effectbench module."""
from __future__ import annotations
from pathlib import Path
from typing import Optional


class EffectBenchError(Exception):
    """Base class for all errors raised by effectbench."""


class ValidationError(EffectBenchError, ValueError):
    """Input data or configuration violates a documented invariant."""


class ParseError(ValidationError):
    """A file could not be parsed. Carries the offending path and line."""

    def __init__(self, message: str, path: Optional[Path] = None, line: Optional[int] = None):
        self.path = Path(path) if path is not None else None
        self.line = line
        location = ""
        if self.path is not None:
            location = f"{self.path}"
            if line is not None:
                location += f":{line}"
            location += ": "
        super().__init__(f"{location}{message}")


class SchemaError(ValidationError):
    """A file parsed but its columns do not match the expected layout."""


class ModelLookupError(EffectBenchError, KeyError):
    """A model name was requested that the data does not contain."""

    def __str__(self) -> str:
        # KeyError repr-quotes its argument; keep the message readable.
        return str(self.args[0]) if self.args else ""


class DomainError(EffectBenchError, ValueError):
    """A numeric argument lies outside the domain of the function."""


class CapacityError(EffectBenchError, ValueError):
    """A request exceeds a hard size limit."""


class EstimationError(EffectBenchError, RuntimeError):
    """A baseline estimator cannot be fitted on the given realization."""


class InputReadError(EffectBenchError, OSError):
    """An input path is missing or unreadable."""


class StageError(EffectBenchError):
    """A pipeline stage failed; wraps the original exception."""

    def __init__(self, stage: str, cause: BaseException):
        self.stage = stage
        self.cause = cause
        super().__init__(f"[{stage}] {cause}")


__all__ = [
    "EffectBenchError",
    "ValidationError",
    "ParseError",
    "SchemaError",
    "ModelLookupError",
    "DomainError",
    "CapacityError",
    "EstimationError",
    "InputReadError",
    "StageError",
]
