"""Small shared helpers: stable hashing, strict-JSON serialization."""

from __future__ import annotations

import hashlib
import json
import math
import os
import tempfile
from pathlib import Path

import numpy as np

from .errors import IoError


def stable_id_hash(text: str) -> int:
    """First 8 bytes of sha256 as an int. Unlike hash(), identical across
    processes and platforms, so it is safe to feed into RNG seeds."""
    return int.from_bytes(hashlib.sha256(text.encode("utf-8")).digest()[:8], "little")


def jsonable(obj):
    """Recursively convert to types the strict JSON grammar accepts.

    Non-finite floats become the strings "inf" / "-inf" / "nan" (json's own
    Infinity literal is not valid JSON and would break downstream parsers).
    """
    if isinstance(obj, (np.integer,)):
        return int(obj)
    if isinstance(obj, (float, np.floating)):
        f = float(obj)
        if math.isfinite(f):
            return f
        if math.isnan(f):
            return "nan"
        return "inf" if f > 0 else "-inf"
    if isinstance(obj, np.ndarray):
        return [jsonable(v) for v in obj.tolist()]
    if isinstance(obj, dict):
        return {str(k): jsonable(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [jsonable(v) for v in obj]
    return obj


def parse_float(value) -> float:
    """Inverse of the jsonable() float encoding."""
    if isinstance(value, str):
        return {"inf": math.inf, "-inf": -math.inf, "nan": math.nan}[value]
    return float(value)


def dump_json(obj, path) -> None:
    """Write deterministic JSON (sorted keys, 2-space indent) atomically."""
    text = json.dumps(jsonable(obj), indent=2, sort_keys=True) + "\n"
    atomic_write_text(path, text)


def atomic_write_text(path, text: str) -> None:
    """Write via a temp file in the same directory, then rename over target."""
    path = Path(path)
    try:
        path.parent.mkdir(parents=True, exist_ok=True)
        fd, tmp = tempfile.mkstemp(dir=path.parent, prefix=f".{path.name}.")
        try:
            with os.fdopen(fd, "w", encoding="utf-8") as fh:
                fh.write(text)
            os.replace(tmp, path)
        except BaseException:
            if os.path.exists(tmp):
                os.unlink(tmp)
            raise
    except OSError as exc:
        raise IoError(f"cannot write {path}: {exc}") from exc
