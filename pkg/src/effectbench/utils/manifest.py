"""
Replication manifest written next to every report.

Records the seed, package versions, SHA-256 of every input file and the
full-precision statistics. It holds no timestamps so repeated runs produce
identical bytes.
"""
from __future__ import annotations
import hashlib
import json
import os
import platform
import uuid
from pathlib import Path
from typing import Any, Dict, Iterable, Optional

import matplotlib
import numpy as np
import pydantic
import scipy

from effectbench import __version__

MANIFEST_NAME = "manifest.json"
_CHUNK = 1 << 20


def hash_file(path: Path) -> str:
    h = hashlib.sha256()
    with open(path, "rb") as f:
        for block in iter(lambda: f.read(_CHUNK), b""):
            h.update(block)
    return h.hexdigest()


def hash_inputs(paths: Iterable[Path], root: Optional[Path] = None) -> Dict[str, str]:
    """SHA-256 per input file; directories contribute every file beneath them."""
    out: Dict[str, str] = {}
    for p in paths:
        p = Path(p)
        files = sorted(f for f in p.rglob("*") if f.is_file()) if p.is_dir() else [p]
        for f in files:
            key = f.relative_to(root).as_posix() if root and f.is_relative_to(root) else f.as_posix()
            out[key] = hash_file(f)
    return dict(sorted(out.items()))


def library_versions() -> Dict[str, str]:
    return {
        "effectbench": __version__,
        "python": platform.python_version(),
        "numpy": np.__version__,
        "scipy": scipy.__version__,
        "matplotlib": matplotlib.__version__,
        "pydantic": pydantic.VERSION,
    }


def build_manifest(
    config: Dict[str, Any],
    seed: Optional[int],
    inputs: Dict[str, str],
    statistics: Dict[str, Any],
    outputs: Optional[Dict[str, str]] = None,
) -> Dict[str, Any]:
    return {
        "seed": seed,
        "versions": library_versions(),
        "config": config,
        "inputs": inputs,
        "statistics": statistics,
        "outputs": outputs or {},
    }


def write_manifest(manifest: Dict[str, Any], path: Path) -> None:
    """Atomic write: temp file in the same directory, then rename."""
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    tmp = path.parent / f"{path.name}.tmp.{uuid.uuid4().hex[:8]}"
    try:
        with open(tmp, "w", encoding="utf-8", newline="\n") as f:
            json.dump(manifest, f, indent=2, sort_keys=True, allow_nan=False)
            f.write("\n")
        os.replace(tmp, path)
    finally:
        if tmp.exists():
            tmp.unlink()


def read_manifest(path: Path) -> Dict[str, Any]:
    with open(path, "r", encoding="utf-8") as f:
        return json.load(f)


__all__ = [
    "MANIFEST_NAME",
    "hash_file",
    "hash_inputs",
    "library_versions",
    "build_manifest",
    "write_manifest",
    "read_manifest",
]
