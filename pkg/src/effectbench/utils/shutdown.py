"""
Ctrl-C handling shared by the CLI and the pipeline.

The CLI's SIGINT handler flips the flags below; the pipeline calls
``checkpoint`` between stages and simulations. Staging directories are
registered so an interrupted run can be cleaned up from the handler.
"""
from __future__ import annotations
import logging
import shutil
from dataclasses import dataclass, field
from pathlib import Path
from typing import List, Optional

log = logging.getLogger(__name__)


@dataclass
class _InterruptState:
    graceful: bool = False
    staging_dirs: List[Path] = field(default_factory=list)


_state = _InterruptState()


class ShutdownRequested(KeyboardInterrupt):
    """Raised at a checkpoint after a graceful shutdown was requested."""


def request_shutdown():
    _state.graceful = True


def is_shutdown_requested() -> bool:
    return _state.graceful


def reset_shutdown_state():
    """Clear the request flag. Registered staging directories are kept."""
    _state.graceful = False


def checkpoint(context: Optional[str] = None):
    if _state.graceful:
        where = f" during {context}" if context else ""
        raise ShutdownRequested(f"Interrupted{where}")


def register_staging_dir(path: Path):
    _state.staging_dirs.append(Path(path))


def unregister_staging_dir(path: Path):
    path = Path(path)
    if path in _state.staging_dirs:
        _state.staging_dirs.remove(path)


def cleanup_staging_dirs():
    """Remove every registered staging directory that still exists."""
    while _state.staging_dirs:
        path = _state.staging_dirs.pop()
        if path.exists():
            log.debug(f"Removing staging directory {path}")
            shutil.rmtree(path, ignore_errors=True)


__all__ = [
    "ShutdownRequested",
    "request_shutdown",
    "is_shutdown_requested",
    "reset_shutdown_state",
    "checkpoint",
    "register_staging_dir",
    "unregister_staging_dir",
    "cleanup_staging_dirs",
]
