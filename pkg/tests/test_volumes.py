import json
import struct

import numpy as np
import pytest

from patchqc import (ConfigError, DynamicVolume, FormatError, SegmentationMask,
                     SliceRecord, read_dataset, read_mask, read_volume,
                     write_dataset, write_volume)


def test_flat_layout_is_frame_major():
    # index t*M*N + m*N + n must address (t, m, n)
    M, N, T = 3, 4, 2
    flat = np.arange(M * N * T, dtype=np.float32)
    vol = DynamicVolume((M, N, T), flat)
    for t in range(T):
        for m in range(M):
            for n in range(N):
                assert vol.data[t, m, n] == flat[t * M * N + m * N + n]


def test_volume_bytes_roundtrip(tmp_path):
    vol = DynamicVolume((2, 2, 1), [1.0, 2.0, 3.0, 4.0])
    path = tmp_path / "v.f32"
    write_volume(vol, path)
    raw = path.read_bytes()
    assert len(raw) == 16
    assert raw[:4] == struct.pack("<f", 1.0)
    assert struct.unpack("<4f", raw) == (1.0, 2.0, 3.0, 4.0)
    back = read_volume(path, (2, 2, 1))
    assert np.array_equal(back.data, vol.data)


def test_mask_bytes_roundtrip(tmp_path):
    mask = SegmentationMask((2, 2, 1), [1, 0, 0, 1])
    path = tmp_path / "m.u8"
    write_volume(mask, path)
    assert path.read_bytes() == bytes([1, 0, 0, 1])
    back = read_mask(path, (2, 2, 1))
    assert np.array_equal(back.bits, mask.bits)


def test_random_volume_roundtrip_bit_identical(tmp_path):
    rng = np.random.default_rng(7)
    for trial in range(5):
        dims = tuple(int(d) for d in rng.integers(1, 9, size=3))
        data = rng.random(dims[0] * dims[1] * dims[2], dtype=np.float32)
        vol = DynamicVolume(dims, data)
        path = tmp_path / f"r{trial}.f32"
        write_volume(vol, path)
        back = read_volume(path, dims)
        assert back.data.tobytes() == vol.data.tobytes()


def test_kind_invariants():
    with pytest.raises(FormatError):
        DynamicVolume((1, 1, 1), [1.5], "probability")
    with pytest.raises(FormatError):
        DynamicVolume((1, 1, 1), [-0.1], "dqc")
    with pytest.raises(FormatError):
        DynamicVolume((1, 1, 1), [0.5], "mask-as-float")
    with pytest.raises(FormatError):
        DynamicVolume((1, 1, 1), [np.nan])
    with pytest.raises(FormatError):
        DynamicVolume((1, 1, 1), [0.0], "unknown-kind")
    with pytest.raises(FormatError):
        SegmentationMask((1, 1, 1), [2])


def test_wrong_length_rejected(tmp_path):
    with pytest.raises(FormatError):
        DynamicVolume((2, 2, 2), [0.0] * 7)
    path = tmp_path / "short.f32"
    path.write_bytes(b"\x00" * 12)
    with pytest.raises(FormatError):
        read_volume(path, (2, 2, 1))


def _tiny_records():
    rng = np.random.default_rng(3)
    records = []
    for i in range(3):
        dims = (4, 5, 3)
        image = DynamicVolume(dims, rng.random(60, dtype=np.float32))
        truth = SegmentationMask(dims, (rng.random(60) > 0.5).astype(np.uint8))
        grades = [int(g) for g in rng.integers(0, 2, size=3)] if i != 1 else None
        records.append(SliceRecord(f"s{i:02d}", image, truth if i != 2 else None, grades))
    return records


def test_dataset_roundtrip(tmp_path):
    records = _tiny_records()
    write_dataset(records, tmp_path / "ds")
    back = read_dataset(tmp_path / "ds")
    assert [r.slice_id for r in back] == [r.slice_id for r in records]
    for orig, loaded in zip(records, back):
        assert loaded.image.data.tobytes() == orig.image.data.tobytes()
        if orig.truth is None:
            assert loaded.truth is None
        else:
            assert loaded.truth.bits.tobytes() == orig.truth.bits.tobytes()
        assert loaded.grades == orig.grades


def test_missing_manifest_is_config_error(tmp_path):
    with pytest.raises(ConfigError):
        read_dataset(tmp_path)


def test_corrupt_dataset_entries(tmp_path):
    records = _tiny_records()
    write_dataset(records, tmp_path / "ds")
    manifest = json.loads((tmp_path / "ds" / "manifest.json").read_text())

    # truncate one image file: declared dims no longer match the byte count
    img = tmp_path / "ds" / manifest["slices"][0]["image"]
    img.write_bytes(img.read_bytes()[:-4])
    with pytest.raises(FormatError):
        read_dataset(tmp_path / "ds")


def test_grades_must_match_frame_count():
    image = DynamicVolume((2, 2, 3), np.zeros(12, np.float32))
    with pytest.raises(FormatError):
        SliceRecord("s", image, None, [0, 1])
    with pytest.raises(FormatError):
        SliceRecord("s", image, None, [0, 1, 2])


def test_truth_dims_must_match():
    image = DynamicVolume((2, 2, 3), np.zeros(12, np.float32))
    truth = SegmentationMask((2, 2, 2), np.zeros(8, np.uint8))
    with pytest.raises(FormatError):
        SliceRecord("s", image, truth)
