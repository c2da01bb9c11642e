"""PNG rendering for qualitative inspection and the review service.

Images travel as 8-bit grayscale PNGs, disagreement maps as heatmaps under
a fixed monotone-luminance colormap (dark blue through orange to white), and
overlay snapshots combine image, mask contour, and optional heatmap tint in
one RGB frame.
"""

from __future__ import annotations

import io

import numpy as np
from PIL import Image
from scipy import ndimage

from .errors import ShapeError

# Monotone-luminance anchor points, dark to bright. Interpolated to 256
# entries; monotonicity means printed grayscale keeps the ordering.
_ANCHORS = np.array([
    [8, 8, 64],
    [48, 32, 128],
    [128, 48, 128],
    [208, 96, 64],
    [248, 176, 48],
    [255, 255, 255],
], dtype=np.float64)


def _build_lut() -> np.ndarray:
    xs = np.linspace(0.0, 1.0, len(_ANCHORS))
    grid = np.linspace(0.0, 1.0, 256)
    lut = np.stack([np.interp(grid, xs, _ANCHORS[:, c]) for c in range(3)], axis=1)
    return np.clip(np.round(lut), 0, 255).astype(np.uint8)


_LUT = _build_lut()


def _require_2d(frame) -> np.ndarray:
    arr = np.asarray(frame)
    if arr.ndim != 2:
        raise ShapeError(f"expected a 2-D frame, got shape {arr.shape}")
    return arr


def _png_bytes(img: Image.Image) -> bytes:
    buf = io.BytesIO()
    img.save(buf, format="PNG")
    return buf.getvalue()


def normalize_frame(frame, lo: float | None = None, hi: float | None = None) -> np.ndarray:
    """Scale a frame to [0, 1] against the given (or observed) range."""
    arr = _require_2d(frame).astype(np.float64)
    lo = float(arr.min()) if lo is None else float(lo)
    hi = float(arr.max()) if hi is None else float(hi)
    if hi <= lo:
        return np.zeros_like(arr)
    return np.clip((arr - lo) / (hi - lo), 0.0, 1.0)


def gray_png(frame, lo: float | None = None, hi: float | None = None) -> bytes:
    """Render one intensity frame as an 8-bit grayscale PNG."""
    scaled = normalize_frame(frame, lo, hi)
    return _png_bytes(Image.fromarray((scaled * 255).round().astype(np.uint8), "L"))


def heatmap_png(frame, lo: float | None = None, hi: float | None = None) -> bytes:
    """Render a nonnegative map frame through the fixed colormap."""
    scaled = normalize_frame(frame, lo, hi)
    idx = (scaled * 255).round().astype(np.uint8)
    return _png_bytes(Image.fromarray(_LUT[idx], "RGB"))


def mask_contour(mask_frame) -> np.ndarray:
    """Boolean edge map: mask pixels whose 8-neighborhood leaves the mask."""
    bits = _require_2d(mask_frame) > 0
    if not bits.any():
        return np.zeros_like(bits)
    eroded = ndimage.binary_erosion(bits, structure=np.ones((3, 3), bool),
                                    border_value=0)
    return bits & ~eroded


def overlay_png(image_frame, mask_frame, dqc_frame=None,
                dqc_lo: float | None = None, dqc_hi: float | None = None,
                heat_alpha: float = 0.45) -> bytes:
    """Image with the mask contour burned in and an optional heatmap tint."""
    base = normalize_frame(image_frame)
    rgb = np.repeat((base * 255).round().astype(np.uint8)[:, :, None], 3, axis=2)
    if dqc_frame is not None:
        scaled = normalize_frame(dqc_frame, dqc_lo, dqc_hi)
        if scaled.shape != base.shape:
            raise ShapeError(f"map frame {scaled.shape} does not match image {base.shape}")
        heat = _LUT[(scaled * 255).round().astype(np.uint8)]
        blend = heat_alpha * scaled[:, :, None]
        rgb = np.clip((1.0 - blend) * rgb + blend * heat, 0, 255).astype(np.uint8)
    edge = mask_contour(_require_2d(mask_frame))
    if edge.shape != base.shape:
        raise ShapeError(f"mask frame {edge.shape} does not match image {base.shape}")
    rgb[edge] = (255, 64, 64)
    return _png_bytes(Image.fromarray(rgb, "RGB"))
