"""Row-major run-length codec for binary mask frames.

Runs alternate starting from value 0; a frame that begins with 1 therefore
starts with an explicit zero-length run. Run lengths always sum to the
pixel count, which is what decode validates.
"""

from __future__ import annotations

import numpy as np

from .errors import FormatError


def encode_rle(frame) -> list[int]:
    """Encode one binary frame (any shape, flattened row-major)."""
    flat = np.asarray(frame).astype(bool).astype(np.uint8).ravel()
    if flat.size == 0:
        return []
    changes = np.flatnonzero(flat[1:] != flat[:-1]) + 1
    bounds = np.concatenate(([0], changes, [flat.size]))
    runs = np.diff(bounds).tolist()
    if flat[0] == 1:
        runs.insert(0, 0)
    return [int(r) for r in runs]


def decode_rle(runs, shape) -> np.ndarray:
    """Decode run lengths into a uint8 array of the given shape."""
    total = int(np.prod(shape))
    out = np.zeros(total, dtype=np.uint8)
    pos = 0
    val = 0
    for r in runs:
        if isinstance(r, bool) or not isinstance(r, int):
            raise FormatError(f"run lengths must be integers, got {r!r}")
        if r < 0:
            raise FormatError(f"negative run length {r}")
        if val:
            out[pos:pos + r] = 1
        pos += r
        val = 1 - val
        if pos > total:
            break
    if pos != total:
        raise FormatError(f"run lengths sum to {pos}, expected {total}")
    return out.reshape(shape)
