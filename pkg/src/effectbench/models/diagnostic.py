from __future__ import annotations
from dataclasses import dataclass
from typing import Optional


@dataclass(frozen=True)
class Diagnostic:
    """One problem found while validating inputs."""
    source: str  # file path or config section
    message: str
    row: Optional[int] = None
    column: Optional[str] = None

    def __str__(self) -> str:
        where = self.source
        if self.row is not None:
            where += f" row {self.row}"
        if self.column is not None:
            where += f" column '{self.column}'"
        return f"{where}: {self.message}"


__all__ = ["Diagnostic"]
