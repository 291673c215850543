"""Reproducibility manifests written next to every stage's artifacts."""
from __future__ import annotations

import hashlib
import json
import platform
from pathlib import Path
from typing import Iterable

import numpy as np

from . import __version__


def file_sha256(path: str | Path) -> str:
    h = hashlib.sha256()
    with open(path, "rb") as fh:
        for chunk in iter(lambda: fh.read(1 << 20), b""):
            h.update(chunk)
    return h.hexdigest()


def write_manifest(
    out_dir: str | Path,
    stage: str,
    config: dict,
    seed: int,
    inputs: Iterable[str | Path],
    artifacts: Iterable[str | Path],
    argv: list[str] | None = None,
) -> Path:
    """``<out>/manifests/<stage>.json``; contains no timestamps so reruns compare equal."""
    out_dir = Path(out_dir)
    mdir = out_dir / "manifests"
    mdir.mkdir(parents=True, exist_ok=True)

    def rel(p: Path) -> str:
        try:
            return str(p.resolve().relative_to(out_dir.resolve()))
        except ValueError:
            return str(p)

    record = {
        "stage": stage,
        "tool": {"name": "finlex", "version": __version__, "python": platform.python_version(),
                 "numpy": np.__version__},
        "seed": seed,
        "argv": argv or [],
        "config": config,
        "inputs": {rel(Path(p)): file_sha256(p) for p in sorted(map(str, inputs))},
        "artifacts": {rel(Path(p)): file_sha256(p) for p in sorted(map(str, artifacts))},
    }
    path = mdir / f"{stage}.json"
    path.write_text(json.dumps(record, indent=1, sort_keys=True) + "\n", encoding="utf-8")
    return path
