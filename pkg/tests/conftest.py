"""Session-scoped fixtures for the acceptance suite.

The heavy runs (20-slice datasets at full 128x128x25 resolution) are built
once per session and shared; TIMINGS records wall-clock seconds so the
runtime-budget checks can assert on what the fixtures actually took.
"""

import time

import pytest

from patchqc import generate_dataset, run_baseline, run_hitl_comparison

CORRUPTED_BACKEND = {"name": "oracle-noise", "bias_sigma": 1.0,
                     "field_sigma": 0.5, "field_scale": 16, "seed": 23,
                     "corrupt_from_grades": "erase-half"}


@pytest.fixture(scope="session")
def timings():
    return {}


@pytest.fixture(scope="session")
def clean_baseline(tmp_path_factory, timings):
    root = tmp_path_factory.mktemp("accept-clean")
    generate_dataset(root / "ds", n_slices=20, seed=5)
    t0 = time.perf_counter()
    run = run_baseline(root / "ds", root / "run", {"name": "oracle-noise"}, None)
    timings["clean_baseline"] = time.perf_counter() - t0
    return run


@pytest.fixture(scope="session")
def corrupted_baseline(tmp_path_factory, timings):
    root = tmp_path_factory.mktemp("accept-corrupt")
    generate_dataset(root / "ds", n_slices=20, seed=11, hard_frames_per_slice=4)
    t0 = time.perf_counter()
    run = run_baseline(root / "ds", root / "run", CORRUPTED_BACKEND, None)
    timings["corrupted_baseline"] = time.perf_counter() - t0
    return run


@pytest.fixture(scope="session")
def hitl_study(corrupted_baseline, tmp_path_factory, timings):
    out = tmp_path_factory.mktemp("accept-hitl") / "study"
    t0 = time.perf_counter()
    report = run_hitl_comparison(corrupted_baseline, out, budget=0.10,
                                 n_mc=100, seed=101)
    timings["hitl"] = time.perf_counter() - t0
    return out, report


@pytest.fixture(scope="session")
def hitl_report(hitl_study):
    return hitl_study[1]
