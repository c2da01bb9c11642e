"""Sliding-window patch grids and streaming overlap statistics.

The fusion pipeline makes one pass per grid over a dynamic image: extract
the K x K x T patch at each origin, run a segmenter on it, and fold the
returned probabilities back into a full-size accumulator. The accumulator
keeps per-cell running statistics, so memory stays O(M*N*T) no matter how
dense the grid is and no per-patch output is ever stored.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import BoundsError, ConfigError, CoverageError, ShapeError
from .volumes import DynamicVolume


def _axis_origins(length: int, K: int, w: int) -> list[int]:
    # regular lattice clipped to fit, plus a flush-to-border origin so the
    # trailing K pixels are always covered
    xs = list(range(0, length - K + 1, w))
    if xs[-1] != length - K:
        xs.append(length - K)
    return xs


@dataclass(frozen=True)
class PatchGrid:
    """Row-major ordered spatial origins of K x K x T sliding-window patches."""

    dims: tuple[int, int, int]
    K: int
    w: int
    origins: tuple[tuple[int, int], ...]

    def __len__(self) -> int:
        return len(self.origins)

    def origin(self, i: int) -> tuple[int, int]:
        if not 0 <= i < len(self.origins):
            raise BoundsError(f"patch index {i} outside 0..{len(self.origins) - 1}")
        return self.origins[i]


def build_grid(dims, K: int, w: int) -> PatchGrid:
    """Enumerate patch origins for spatial stride w.

    Origins step by w along each axis, clipped so origin + K never leaves
    the image; a flush origin (axis length - K) is appended when the lattice
    does not already end there. With w <= K this covers every pixel.
    """
    M, N, T = (int(d) for d in dims)
    if K <= 0 or K > min(M, N):
        raise ConfigError(f"patch size K={K} must satisfy 0 < K <= min(M, N) = {min(M, N)}")
    if w <= 0 or w > K:
        raise ConfigError(f"stride w={w} must satisfy 0 < w <= K={K}; w > K leaves coverage gaps")
    rows = _axis_origins(M, K, w)
    cols = _axis_origins(N, K, w)
    origins = tuple((r, c) for r in rows for c in cols)
    return PatchGrid(dims=(M, N, T), K=int(K), w=int(w), origins=origins)


def _volume_data(vol, dims) -> np.ndarray:
    data = vol.data if isinstance(vol, DynamicVolume) else np.asarray(vol)
    M, N, T = dims
    if data.shape != (T, M, N):
        raise ShapeError(f"volume shape {data.shape} does not match dims {tuple(dims)}")
    return data


def extract_patch(image, grid: PatchGrid, i: int):
    """Copy the i-th patch (all T frames) out of a full-size volume.

    Returns the same flavor it was given: DynamicVolume in, DynamicVolume
    out; plain (T, M, N) array in, (T, K, K) array out.
    """
    r, c = grid.origin(i)
    data = _volume_data(image, grid.dims)
    block = np.ascontiguousarray(data[:, r:r + grid.K, c:c + grid.K])
    if isinstance(image, DynamicVolume):
        return DynamicVolume((grid.K, grid.K, grid.dims[2]), block, image.kind)
    return block


class OverlapAccumulator:
    """Streaming per-cell statistics over overlapping patch probabilities.

    State is the Welford pair (mean, m2) in float64 plus a per-(m, n)
    coverage count; `sum` and `sumsq` are derived views of the same
    information. The Welford form keeps the variance exactly zero whenever
    every covering patch agrees, which raw sum-of-squares accumulation
    cannot guarantee in floating point. Folding must happen in grid order;
    identical inputs folded in the same order give bit-identical state.
    """

    def __init__(self, dims):
        M, N, T = (int(d) for d in dims)
        self.dims = (M, N, T)
        self.mean = np.zeros((T, M, N), dtype=np.float64)
        self.m2 = np.zeros((T, M, N), dtype=np.float64)
        self.count = np.zeros((M, N), dtype=np.int64)

    @property
    def sum(self) -> np.ndarray:
        return self.mean * self.count

    @property
    def sumsq(self) -> np.ndarray:
        return self.m2 + self.count * np.square(self.mean)

    def fold_patch(self, grid: PatchGrid, i: int, probs) -> None:
        """Fold one patch of probabilities into the running statistics.

        The coverage count is spatial: it increments once per folded patch
        at each (m, n) in the footprint, regardless of T.
        """
        if grid.dims != self.dims:
            raise ShapeError(f"grid dims {grid.dims} != accumulator dims {self.dims}")
        r, c = grid.origin(i)
        p = probs.data if isinstance(probs, DynamicVolume) else np.asarray(probs)
        K, T = grid.K, self.dims[2]
        if p.shape != (T, K, K):
            raise ShapeError(f"patch shape {p.shape} != expected {(T, K, K)}")
        p = p.astype(np.float64, copy=False)
        rows, cols = slice(r, r + K), slice(c, c + K)
        n = self.count[rows, cols] + 1
        mean = self.mean[:, rows, cols]      # view: updates in place
        delta = p - mean
        mean += delta / n
        self.m2[:, rows, cols] += delta * (p - mean)
        self.count[rows, cols] = n

    def _require_coverage(self) -> None:
        if np.any(self.count == 0):
            holes = int((self.count == 0).sum())
            raise CoverageError(f"{holes} cells have no covering patch; fold a full grid first")

    def finalize_mean(self) -> np.ndarray:
        """Per-cell mean probability, clamped to [0, 1]; float64 (T, M, N)."""
        self._require_coverage()
        return np.clip(self.mean, 0.0, 1.0)

    def finalize_std(self) -> np.ndarray:
        """Per-cell population standard deviation across covering patches.

        Population (not sample) normalization: divide by count. Rounding can
        leave m2 a hair negative, so it is clamped before the square root.
        """
        self._require_coverage()
        return np.sqrt(np.maximum(self.m2, 0.0) / self.count)
