"""Fused segmentations, across-patch disagreement maps, quality metrics.

The segmentation mask comes from a coarse-stride pass (mean probability,
binarized at 0.5 with ties going to foreground). The disagreement map comes
from a second, denser pass: the per-cell standard deviation of every patch
probability covering that cell. Per-frame quality is the Frobenius norm of
the map frame normalized by the segmented area, so shrinking or empty
segmentations are penalized rather than rewarded.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy import ndimage

from .backends import InferContext
from .errors import ConfigError, EmptySegmentationError, ShapeError
from .patching import OverlapAccumulator, build_grid, extract_patch
from .volumes import DynamicVolume, SegmentationMask

# Sorts above every finite quality value; assigned to frames whose
# segmentation is empty, where area normalization is undefined.
SENTINEL_MAX = math.inf

_STRUCTURE = {
    8: np.ones((3, 3), dtype=bool),
    4: ndimage.generate_binary_structure(2, 1),
}


def binarize(mean_probs) -> SegmentationMask:
    """Threshold mean probabilities at 0.5; exact ties become foreground."""
    data = mean_probs.data if isinstance(mean_probs, DynamicVolume) else np.asarray(mean_probs)
    if data.ndim != 3:
        raise ShapeError(f"expected a (T, M, N) array, got shape {data.shape}")
    T, M, N = data.shape
    return SegmentationMask((M, N, T), (data >= 0.5).astype(np.uint8))


def _fused(image, backend, K, w, slice_id, seed, finalize):
    grid = build_grid(image.dims, K, w)
    acc = OverlapAccumulator(image.dims)
    for i in range(len(grid)):
        patch = extract_patch(image, grid, i)
        ctx = InferContext(slice_id=slice_id, patch_index=i, origin=grid.origin(i),
                           seed=seed, stride=w)
        acc.fold_patch(grid, i, backend.infer(patch, ctx))
    return acc.finalize_mean() if finalize == "mean" else acc.finalize_std()


def compute_dqc_map(image: DynamicVolume, backend, K: int = 64, w_seg: int = 16,
                    w_map: int = 2, slice_id: str = "", seed: int = 0,
                    allow_equal_strides: bool = False):
    """Run the two-stride fusion over one dynamic image.

    Returns (mask, dqc_map): the binarized segmentation from the w_seg pass
    and the float64 (T, M, N) disagreement map from the denser w_map pass.
    The map stride must be strictly smaller than the segmentation stride
    unless allow_equal_strides is set.
    """
    if w_map > w_seg or (w_map == w_seg and not allow_equal_strides):
        raise ConfigError(
            f"map stride {w_map} must be smaller than segmentation stride {w_seg}"
            " (allow_equal_strides=True permits equality)")
    mask = binarize(_fused(image, backend, K, w_seg, slice_id, seed, "mean"))
    dqc_map = _fused(image, backend, K, w_map, slice_id, seed, "std")
    return mask, dqc_map


def q_pixel(dqc_map, mask: SegmentationMask, m: int, n: int, t: int) -> float:
    """Pixel disagreement normalized by the frame's segmented area."""
    area = mask.area(t)
    if area == 0:
        raise EmptySegmentationError(f"frame {t} has no segmented pixels")
    data = np.asarray(dqc_map, dtype=np.float64)
    return float(data[t, m, n] / area)


def q_frame(dqc_map, mask: SegmentationMask) -> np.ndarray:
    """Per-frame map energy (Frobenius norm) over segmented area.

    Frames whose segmentation is empty get SENTINEL_MAX so they rank ahead
    of every finite value in referral ordering. Accumulation is float64.
    """
    data = np.asarray(dqc_map, dtype=np.float64)
    T = data.shape[0]
    fro = np.sqrt(np.square(data.reshape(T, -1)).sum(axis=1))
    areas = mask.areas().astype(np.float64)
    out = np.full(T, SENTINEL_MAX, dtype=np.float64)
    nonzero = areas > 0
    out[nonzero] = fro[nonzero] / areas[nonzero]
    return out


def q_slice(q_frames) -> float:
    """Mean of the finite per-frame values; sentinel frames are excluded."""
    q = np.asarray(q_frames, dtype=np.float64)
    finite = q[np.isfinite(q)]
    if finite.size == 0:
        raise EmptySegmentationError("every frame in the slice is empty")
    return float(finite.mean())


@dataclass(frozen=True)
class QcSeries:
    """Per-slice quality record: q_frame series, its mean, raw areas."""

    slice_id: str
    q_frame: np.ndarray
    q_slice: float
    area: np.ndarray
    sentinel_count: int


def build_qc_series(slice_id: str, dqc_map, mask: SegmentationMask) -> QcSeries:
    qf = q_frame(dqc_map, mask)
    return QcSeries(slice_id=slice_id, q_frame=qf, q_slice=q_slice(qf),
                    area=mask.areas(), sentinel_count=int(np.isinf(qf).sum()))


def count_components(frame, connectivity: int = 8) -> int:
    """Connected component count of one binary frame."""
    structure = _STRUCTURE[int(connectivity)]
    _, n = ndimage.label(np.asarray(frame) > 0, structure=structure)
    return int(n)


@dataclass(frozen=True)
class FrameDiagnostics:
    t: int
    area: int
    component_count: int
    failed: bool


def frame_diagnostics(mask: SegmentationMask, connectivity: int = 8) -> list[FrameDiagnostics]:
    """Area and component count per frame.

    A frame fails unless it is exactly one connected component; an empty
    frame (zero components) therefore also fails. 8-connectivity is the
    default; pass connectivity=4 for the conservative variant.
    """
    if connectivity not in _STRUCTURE:
        raise ConfigError(f"connectivity must be 4 or 8, got {connectivity}")
    out = []
    for t in range(mask.dims[2]):
        frame = mask.bits[t]
        n = count_components(frame, connectivity)
        out.append(FrameDiagnostics(t=t, area=int(frame.sum()),
                                    component_count=n, failed=n != 1))
    return out


def _bits_of(x) -> np.ndarray:
    if isinstance(x, SegmentationMask):
        return x.bits.astype(bool)
    return np.asarray(x).astype(bool)


def dice(a, b) -> float:
    """Overlap score 2|A n B| / (|A| + |B|); 1.0 when both are empty.

    Works on whole masks or single frames, any matching shapes.
    """
    x, y = _bits_of(a), _bits_of(b)
    if x.shape != y.shape:
        raise ShapeError(f"mask shapes differ: {x.shape} vs {y.shape}")
    total = int(x.sum()) + int(y.sum())
    if total == 0:
        return 1.0
    inter = int(np.logical_and(x, y).sum())
    return 2.0 * inter / total
