"""Per-patch segmenter backends.

Every backend is a pure function of (patch, context): identical calls return
identical probability patches, so fused outputs are reproducible no matter
how patches are scheduled. Three families ship here: a truth-reading oracle
with controllable inter-patch noise, a classical intensity band-pass, and a
loader for probabilities precomputed by an external model.
"""

from __future__ import annotations

from dataclasses import dataclass
from pathlib import Path

import numpy as np
from scipy import ndimage
from scipy.special import expit, logit

from .errors import ConfigError, FormatError, ShapeError
from .util import stable_id_hash
from .volumes import DynamicVolume, SegmentationMask, read_volume

TRUTH_EPS = 1e-3

CORRUPT_MODES = ("erase-half", "inflate")


@dataclass(frozen=True)
class InferContext:
    """Identifies one inference call: which slice, which patch, which grid."""

    slice_id: str
    patch_index: int
    origin: tuple[int, int]
    seed: int = 0
    stride: int = 0


@dataclass(frozen=True)
class NoiseProfile:
    """Controls synthetic inter-patch disagreement for the truth oracle.

    bias_sigma shifts each whole patch by a single logit offset drawn per
    (seed, slice, patch index); field_sigma adds a smooth spatial logit
    field with correlation length field_scale pixels. corrupt_frames lists
    (frame, mode) pairs that receive a deliberate failure on top.
    """

    bias_sigma: float = 0.0
    field_sigma: float = 0.0
    field_scale: float = 8.0
    corrupt_frames: tuple = ()
    seed: int = 0

    def __post_init__(self):
        if self.bias_sigma < 0 or self.field_sigma < 0:
            raise ConfigError("noise sigmas must be >= 0")
        if self.field_scale <= 0:
            raise ConfigError("field_scale must be positive")
        frames = []
        for t, mode in self.corrupt_frames:
            if mode not in CORRUPT_MODES:
                raise ConfigError(f"unknown corruption mode {mode!r}, expected one of {CORRUPT_MODES}")
            if int(t) < 0:
                raise ConfigError(f"corrupt frame index {t} must be >= 0")
            frames.append((int(t), str(mode)))
        object.__setattr__(self, "corrupt_frames", tuple(frames))


def _bilinear_upsample(coarse: np.ndarray, K: int) -> np.ndarray:
    g = coarse.shape[0]
    xs = np.linspace(0.0, g - 1.0, K)
    i0 = np.floor(xs).astype(int)
    i1 = np.minimum(i0 + 1, g - 1)
    f = xs - i0
    rows = coarse[i0, :] * (1.0 - f)[:, None] + coarse[i1, :] * f[:, None]
    return rows[:, i0] * (1.0 - f)[None, :] + rows[:, i1] * f[None, :]


def _smooth_field(rng, K: int, sigma: float, scale: float) -> np.ndarray:
    # i.i.d. normals on a coarse lattice spaced ~scale px, upsampled to K x K
    g = max(2, int(round(K / scale)) + 1)
    return _bilinear_upsample(rng.normal(0.0, sigma, size=(g, g)), K)


def _half_plane(rng, K: int) -> tuple:
    # (rows, cols) selector for one random half of a K x K frame
    h = K // 2
    orientation = int(rng.integers(4))
    if orientation == 0:
        return (slice(None), slice(0, h))
    if orientation == 1:
        return (slice(None), slice(h, None))
    if orientation == 2:
        return (slice(0, h), slice(None))
    return (slice(h, None), slice(None))


def noisy_oracle_infer(patch: DynamicVolume, truth_patch, profile: NoiseProfile,
                       context: InferContext) -> DynamicVolume:
    """Truth-reading stand-in for a learned per-patch segmenter.

    Output is logistic(logit(truth clamped to [eps, 1-eps]) + patch bias +
    smooth spatial field). The bias is drawn once per (seed, slice, patch
    index), so overlapping patches disagree in a controlled, reproducible
    way. Frames named in profile.corrupt_frames are then modified:
    'erase-half' zeroes the probabilities on one randomly oriented half of
    the patch, 'inflate' adds +2 logits inside the dilated truth band.
    """
    bits = truth_patch.bits if isinstance(truth_patch, SegmentationMask) else np.asarray(truth_patch)
    if bits.shape != patch.data.shape:
        raise ShapeError(f"truth patch shape {bits.shape} != patch shape {patch.data.shape}")
    T = patch.dims[2]
    K = patch.dims[0]
    for t, _ in profile.corrupt_frames:
        if t >= T:
            raise ConfigError(f"corrupt frame {t} out of range for T={T}")
    base = np.clip(bits.astype(np.float64), TRUTH_EPS, 1.0 - TRUTH_EPS)

    if profile.bias_sigma == 0 and profile.field_sigma == 0 and not profile.corrupt_frames:
        # logistic(logit(x)) == x up to roundoff; skip the transform entirely
        # so agreeing patches stay bit-identical
        p = base
    else:
        rng = np.random.default_rng(
            [profile.seed, stable_id_hash(context.slice_id), context.patch_index])
        logits = logit(base)
        logits += rng.normal(0.0, profile.bias_sigma)
        if profile.field_sigma > 0:
            logits += _smooth_field(rng, K, profile.field_sigma, profile.field_scale)
        erase = []
        for t, mode in profile.corrupt_frames:
            if mode == "inflate":
                band = ndimage.binary_dilation(
                    bits[t] > 0, structure=np.ones((3, 3), bool), iterations=3)
                logits[t][band] += 2.0
            else:
                erase.append(t)
        p = expit(logits)
        for t in erase:
            p[t][_half_plane(rng, K)] = 0.0
    return DynamicVolume(patch.dims, np.clip(p, 0.0, 1.0).astype(np.float32), "probability")


class OracleNoiseBackend:
    """Noisy oracle over ground-truth masks.

    truths maps slice_id -> SegmentationMask; profile is either a single
    NoiseProfile shared by all slices or a slice_id -> NoiseProfile mapping.
    """

    name = "oracle-noise"

    def __init__(self, truths, profile):
        self.truths = truths
        self.profile = profile

    def _profile_for(self, slice_id: str) -> NoiseProfile:
        if isinstance(self.profile, NoiseProfile):
            return self.profile
        prof = self.profile.get(slice_id)
        if prof is None:
            raise ConfigError(f"no noise profile for slice {slice_id!r}")
        return prof

    def infer(self, patch: DynamicVolume, context: InferContext) -> DynamicVolume:
        truth = self.truths.get(context.slice_id)
        if truth is None:
            raise ConfigError(f"no ground truth available for slice {context.slice_id!r}")
        r, c = context.origin
        K = patch.dims[0]
        truth_patch = truth.bits[:, r:r + K, c:c + K]
        return noisy_oracle_infer(patch, truth_patch, self._profile_for(context.slice_id), context)


def intensity_band_infer(patch: DynamicVolume, lo: float, hi: float, tau: float) -> DynamicVolume:
    """Classical band-pass baseline: probability peaks where the patch's
    min-max normalized intensity falls between lo and hi. A constant patch
    normalizes to all zeros."""
    x = patch.data.astype(np.float64)
    xmin, xmax = float(x.min()), float(x.max())
    if xmax > xmin:
        x = (x - xmin) / (xmax - xmin)
    else:
        x = np.zeros_like(x)
    p = expit((x - lo) / tau) * expit((hi - x) / tau)
    return DynamicVolume(patch.dims, p.astype(np.float32), "probability")


class IntensityBandBackend:
    """Stateless intensity band-pass segmenter."""

    name = "intensity"

    def __init__(self, lo: float = 0.35, hi: float = 0.75, tau: float = 0.05):
        if tau <= 0:
            raise ConfigError("tau must be positive")
        if not lo < hi:
            raise ConfigError(f"need lo < hi, got lo={lo} hi={hi}")
        self.lo, self.hi, self.tau = float(lo), float(hi), float(tau)

    def infer(self, patch: DynamicVolume, context: InferContext) -> DynamicVolume:
        return intensity_band_infer(patch, self.lo, self.hi, self.tau)


def _prob_patch_path(base: Path, slice_id: str, patch_index: int) -> Path:
    return Path(base) / slice_id / f"probs_{patch_index}.f32"


def external_probs_load(run_dir, slice_id: str, grid) -> list[DynamicVolume]:
    """Load per-patch probability files written by an external model.

    Expects one probs_<patch_index>.f32 per grid patch under
    <run_dir>/<slice_id>/, each K*K*T float32 values in patch frame-major
    order and inside [0, 1].
    """
    dims = (grid.K, grid.K, grid.dims[2])
    out = []
    for i in range(len(grid)):
        path = _prob_patch_path(run_dir, slice_id, i)
        if not path.is_file():
            raise FormatError(f"missing probability file for patch {i}: {path}")
        out.append(read_volume(path, dims, kind="probability"))
    return out


class ExternalProbsBackend:
    """Serves probabilities precomputed by an external model.

    dirs maps grid stride -> directory, so one backend can answer both the
    segmentation-stride and map-stride passes of the same run.
    """

    name = "external"

    def __init__(self, dirs):
        self.dirs = {int(k): Path(v) for k, v in dict(dirs).items()}

    def infer(self, patch: DynamicVolume, context: InferContext) -> DynamicVolume:
        base = self.dirs.get(context.stride)
        if base is None:
            raise ConfigError(f"no external probability directory configured for stride {context.stride}")
        path = _prob_patch_path(base, context.slice_id, context.patch_index)
        if not path.is_file():
            raise FormatError(f"missing probability file for patch {context.patch_index}: {path}")
        return read_volume(path, patch.dims, kind="probability")
