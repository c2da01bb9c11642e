"""Volumetric containers and dataset directory I/O.

All volumes are frame-major: dims (M, N, T) map onto a numpy array of shape
(T, M, N), so the flat index t*M*N + m*N + n walks the buffer in order and a
single frame is one contiguous block. Raw files are little-endian: float32
for scalar fields, one byte per pixel for masks.
"""

from __future__ import annotations

import json
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .errors import ConfigError, FormatError, IoError

KINDS = ("intensity", "probability", "dqc", "mask-as-float")

MANIFEST_NAME = "manifest.json"
MANIFEST_VERSION = 1


def _frame_major(data, dims, dtype):
    M, N, T = dims
    arr = np.asarray(data, dtype=dtype)
    if arr.size != M * N * T:
        raise FormatError(f"expected {M * N * T} values for dims {dims}, got {arr.size}")
    return np.ascontiguousarray(arr.reshape(T, M, N))


@dataclass
class DynamicVolume:
    """Scalar field over an (M, N, T) grid.

    data has shape (T, M, N), float32. kind constrains values: probabilities
    must lie in [0, 1], dqc maps must be nonnegative, mask-as-float must be
    exactly 0/1. Every kind must be finite everywhere.
    """

    dims: tuple[int, int, int]
    data: np.ndarray
    kind: str = "intensity"

    def __post_init__(self):
        if self.kind not in KINDS:
            raise FormatError(f"unknown volume kind {self.kind!r}, expected one of {KINDS}")
        self.dims = tuple(int(d) for d in self.dims)
        if len(self.dims) != 3 or any(d <= 0 for d in self.dims):
            raise FormatError(f"dims must be three positive integers, got {self.dims}")
        self.data = _frame_major(self.data, self.dims, np.float32)
        if not np.isfinite(self.data).all():
            raise FormatError(f"{self.kind} volume contains non-finite values")
        if self.kind == "probability" and (self.data.min() < 0.0 or self.data.max() > 1.0):
            raise FormatError("probability volume has values outside [0, 1]")
        if self.kind == "dqc" and self.data.min() < 0.0:
            raise FormatError("dqc volume has negative values")
        if self.kind == "mask-as-float" and not np.isin(self.data, (0.0, 1.0)).all():
            raise FormatError("mask-as-float volume has values other than 0 and 1")

    def frame(self, t: int) -> np.ndarray:
        return self.data[t]

    def copy(self) -> "DynamicVolume":
        return DynamicVolume(self.dims, self.data.copy(), self.kind)


@dataclass
class SegmentationMask:
    """Binary labeling of an (M, N, T) grid; bits has shape (T, M, N), uint8."""

    dims: tuple[int, int, int]
    bits: np.ndarray

    def __post_init__(self):
        self.dims = tuple(int(d) for d in self.dims)
        self.bits = _frame_major(self.bits, self.dims, np.uint8)
        if not np.isin(self.bits, (0, 1)).all():
            raise FormatError("mask has byte values other than 0 and 1")

    def area(self, t: int) -> int:
        return int(self.bits[t].sum())

    def areas(self) -> np.ndarray:
        T = self.dims[2]
        return self.bits.reshape(T, -1).sum(axis=1)

    def copy(self) -> "SegmentationMask":
        return SegmentationMask(self.dims, self.bits.copy())


@dataclass
class SliceRecord:
    """One acquired slice: the dynamic image plus optional truth and grades."""

    slice_id: str
    image: DynamicVolume
    truth: SegmentationMask | None = None
    grades: list[int] | None = None

    def __post_init__(self):
        if self.truth is not None and self.truth.dims != self.image.dims:
            raise FormatError(
                f"slice {self.slice_id!r}: truth dims {self.truth.dims} "
                f"!= image dims {self.image.dims}")
        if self.grades is not None:
            self.grades = [int(g) for g in self.grades]
            if len(self.grades) != self.image.dims[2]:
                raise FormatError(
                    f"slice {self.slice_id!r}: {len(self.grades)} grades for "
                    f"{self.image.dims[2]} frames")
            if any(g not in (0, 1) for g in self.grades):
                raise FormatError(f"slice {self.slice_id!r}: grades must be 0 or 1")


def _read_bytes(path) -> bytes:
    try:
        return Path(path).read_bytes()
    except FileNotFoundError as exc:
        raise FormatError(f"missing file {path}") from exc
    except OSError as exc:
        raise IoError(f"cannot read {path}: {exc}") from exc


def write_volume(vol, path) -> None:
    """Write raw little-endian bytes: float32 per value for scalar volumes
    (DynamicVolume or plain float arrays), one byte per pixel for masks."""
    if isinstance(vol, SegmentationMask):
        payload = np.ascontiguousarray(vol.bits, dtype=np.uint8).tobytes()
    elif isinstance(vol, DynamicVolume):
        payload = np.ascontiguousarray(vol.data, dtype="<f4").tobytes()
    else:
        payload = np.ascontiguousarray(np.asarray(vol), dtype="<f4").tobytes()
    path = Path(path)
    try:
        path.parent.mkdir(parents=True, exist_ok=True)
        path.write_bytes(payload)
    except OSError as exc:
        raise IoError(f"cannot write {path}: {exc}") from exc


def read_volume(path, dims, kind="intensity") -> DynamicVolume:
    raw = _read_bytes(path)
    M, N, T = dims
    if len(raw) != M * N * T * 4:
        raise FormatError(
            f"{path}: {len(raw)} bytes but dims {tuple(dims)} need {M * N * T * 4}")
    data = np.frombuffer(raw, dtype="<f4")
    try:
        return DynamicVolume(tuple(dims), data, kind)
    except FormatError as exc:
        raise FormatError(f"{path}: {exc}") from exc


def read_mask(path, dims) -> SegmentationMask:
    raw = _read_bytes(path)
    M, N, T = dims
    if len(raw) != M * N * T:
        raise FormatError(f"{path}: {len(raw)} bytes but dims {tuple(dims)} need {M * N * T}")
    try:
        return SegmentationMask(tuple(dims), np.frombuffer(raw, dtype=np.uint8))
    except FormatError as exc:
        raise FormatError(f"{path}: {exc}") from exc


def write_dataset(records, root) -> Path:
    """Lay out a dataset directory and return the manifest path.

    Layout: manifest.json at the root, per-slice payloads under
    slices/<id>/image.f32 (+ truth.u8, grades.json when present).
    """
    root = Path(root)
    entries = []
    for rec in records:
        M, N, T = rec.image.dims
        base = Path("slices") / rec.slice_id
        entry = {"id": rec.slice_id, "M": M, "N": N, "T": T,
                 "image": str(base / "image.f32")}
        write_volume(rec.image, root / base / "image.f32")
        if rec.truth is not None:
            entry["truth"] = str(base / "truth.u8")
            write_volume(rec.truth, root / base / "truth.u8")
        if rec.grades is not None:
            entry["grades"] = str(base / "grades.json")
            gpath = root / base / "grades.json"
            gpath.write_text(json.dumps(rec.grades) + "\n")
        entries.append(entry)
    manifest = {"version": MANIFEST_VERSION, "slices": entries}
    mpath = root / MANIFEST_NAME
    try:
        mpath.parent.mkdir(parents=True, exist_ok=True)
        mpath.write_text(json.dumps(manifest, indent=2, sort_keys=True) + "\n")
    except OSError as exc:
        raise IoError(f"cannot write {mpath}: {exc}") from exc
    return mpath


def read_dataset(root) -> list[SliceRecord]:
    """Load every slice listed by manifest.json, validating all invariants."""
    root = Path(root)
    mpath = root / MANIFEST_NAME
    if not mpath.is_file():
        raise ConfigError(f"no {MANIFEST_NAME} under {root}")
    try:
        manifest = json.loads(mpath.read_text())
    except (OSError, json.JSONDecodeError) as exc:
        raise FormatError(f"unreadable manifest {mpath}: {exc}") from exc
    if manifest.get("version") != MANIFEST_VERSION:
        raise FormatError(
            f"manifest version {manifest.get('version')!r}, expected {MANIFEST_VERSION}")
    records = []
    for entry in manifest.get("slices", []):
        try:
            slice_id = entry["id"]
            dims = (int(entry["M"]), int(entry["N"]), int(entry["T"]))
            image_path = entry["image"]
        except (KeyError, TypeError, ValueError) as exc:
            raise FormatError(f"bad manifest entry {entry!r}") from exc
        image = read_volume(root / image_path, dims, "intensity")
        truth = read_mask(root / entry["truth"], dims) if "truth" in entry else None
        grades = None
        if "grades" in entry:
            gpath = root / entry["grades"]
            try:
                grades = json.loads(_read_bytes(gpath))
            except json.JSONDecodeError as exc:
                raise FormatError(f"{gpath}: not valid JSON") from exc
            if not isinstance(grades, list):
                raise FormatError(f"{gpath}: grades must be a JSON array")
        records.append(SliceRecord(slice_id, image, truth, grades))
    return records
