"""Acceptance suite: one test per shipping requirement, run at full scale.

Each test prints a [PASS] line with the measured numbers (visible with -s;
under plain pytest the per-test PASSED/FAILED line is the verdict).
"""

import time
import tracemalloc

import numpy as np
import pytest

from oracles import gather_mean_std
from patchqc import (OverlapAccumulator, binarize, build_grid, compute_dqc_map,
                     load_run, q_frame, run_difficulty_auc, run_hitl_comparison)


def test_fusion_matches_brute_force_gather():
    """Streaming mean/std equal the materialize-every-patch reference on 200
    random instances (dims <= 32x32x5, K <= 8, w <= K) within 1e-6 / 1e-5."""
    rng = np.random.default_rng(2024)
    worst_mean = worst_std = 0.0
    t0 = time.perf_counter()
    for _ in range(200):
        M = int(rng.integers(8, 33))
        N = int(rng.integers(8, 33))
        T = int(rng.integers(1, 6))
        K = int(rng.integers(2, min(M, N, 8) + 1))
        w = int(rng.integers(1, K + 1))
        grid = build_grid((M, N, T), K, w)
        patches = rng.random((len(grid), T, K, K))
        acc = OverlapAccumulator((M, N, T))
        for i in range(len(grid)):
            acc.fold_patch(grid, i, patches[i])
        mean, std = acc.finalize_mean(), acc.finalize_std()
        ref_mean, ref_std, ref_count = gather_mean_std((M, N, T), grid.origins,
                                                       K, patches)
        assert np.array_equal(acc.count, ref_count)
        worst_mean = max(worst_mean, float(np.abs(mean - ref_mean).max()))
        worst_std = max(worst_std, float(np.abs(std - ref_std).max()))
    elapsed = time.perf_counter() - t0
    assert worst_mean <= 1e-6
    assert worst_std <= 1e-5
    assert elapsed < 10.0
    print(f"[PASS] fused mean/std match brute-force gather on 200 instances "
          f"(max |d_mean| {worst_mean:.2e}, max |d_std| {worst_std:.2e}, "
          f"{elapsed:.1f}s)")


def test_threshold_and_disagreement_laws():
    """Ties binarize to foreground; agreeing patches give an all-zero map;
    an exact {0.2, 0.8} two-way split gives std 0.3 everywhere."""
    assert binarize(np.full((1, 2, 2), 0.5)).bits.min() == 1

    class Constant:
        name = "constant"

        def infer(self, patch, context):
            return np.full(patch.data.shape, 0.7)

    from patchqc.volumes import DynamicVolume
    image = DynamicVolume((12, 12, 3), np.zeros((3, 12, 12), dtype=np.float32))
    mask, dqc_map = compute_dqc_map(image, Constant(), K=4, w_seg=4, w_map=2)
    assert mask.bits.min() == 1                      # 0.7 >= 0.5 everywhere
    assert float(np.abs(dqc_map).max()) <= 1e-9      # exact agreement

    grid = build_grid((6, 6, 2), 6, 6)               # one full-frame patch
    acc = OverlapAccumulator((6, 6, 2))
    acc.fold_patch(grid, 0, np.full((2, 6, 6), 0.2))
    acc.fold_patch(grid, 0, np.full((2, 6, 6), 0.8))
    assert np.abs(acc.finalize_mean() - 0.5).max() <= 1e-9
    assert np.abs(acc.finalize_std() - 0.3).max() <= 1e-9
    print("[PASS] tie->1, all-agree map == 0, {0.2,0.8} coverage std == 0.3 "
          "(within 1e-9)")


def test_frame_quality_scale_law():
    """Scaling the disagreement map by c scales every finite per-frame value
    by c, within 1e-9, for c in {0.5, 2, 10}."""
    rng = np.random.default_rng(7)
    dqc_map = rng.random((5, 16, 16))
    bits = (rng.random((5, 16, 16)) < 0.4).astype(np.uint8)
    bits[3] = 0                                       # one sentinel frame
    bits[0, 4, 4] = 1                                 # never empty elsewhere
    from patchqc.volumes import SegmentationMask
    mask = SegmentationMask((16, 16, 5), bits)
    base = q_frame(dqc_map, mask)
    assert np.isinf(base[3]) and np.isfinite(np.delete(base, 3)).all()
    worst = 0.0
    for c in (0.5, 2.0, 10.0):
        scaled = q_frame(c * dqc_map, mask)
        finite = np.isfinite(base)
        worst = max(worst, float(np.abs(scaled[finite] - c * base[finite]).max()))
        assert np.isinf(scaled[3])
    assert worst <= 1e-9
    print(f"[PASS] q_frame scales linearly with the map for c in "
          f"{{0.5, 2, 10}} (max |d| {worst:.2e})")


def test_zero_noise_end_to_end(clean_baseline):
    """20 clean slices at 128x128x25 with the exact-oracle backend: perfect
    Dice, no failed frames, and an identically-zero quality series."""
    grid_seg = build_grid((128, 128, 25), 64, 16)
    grid_map = build_grid((128, 128, 25), 64, 2)
    assert len(grid_seg) == 25 and len(grid_map) == 1089
    report = clean_baseline.report
    assert report["n_slices"] == 20 and report["frames"] == 500
    assert report["failure_prevalence"] == 0.0
    for outcome in clean_baseline.outcomes:
        assert outcome.dice_volume == 1.0
        assert outcome.qc.sentinel_count == 0
        assert np.isfinite(outcome.qc.q_frame).all()
        assert (outcome.qc.q_frame == 0.0).all()
    print("[PASS] zero-noise end-to-end: Dice = 1.0 on all 20 slices, "
          "prevalence 0%, every finite q_frame == 0")


def test_guided_review_beats_random(hitl_report, timings):
    """10% guided referral + oracle correction: significant Dice gain over
    baseline, larger than the random-referral MC mean gain, and prevalence
    ordering guided < random < baseline. Runtime under 5 minutes."""
    base = hitl_report["baseline"]
    dqc = hitl_report["dqc"]
    rand = hitl_report["random"]
    p = hitl_report["p_values"]["dqc_vs_baseline"]
    assert dqc["dice_mean"] > base["dice_mean"]
    assert p < 0.05
    gain_dqc = dqc["dice_mean"] - base["dice_mean"]
    gain_rand = rand["dice_mean"] - base["dice_mean"]
    assert gain_dqc > gain_rand
    assert dqc["failure_prevalence"] < rand["prevalence_mean"] < \
        base["failure_prevalence"]
    elapsed = timings["corrupted_baseline"] + timings["hitl"]
    assert elapsed < 300.0
    print(f"[PASS] guided review: Dice {base['dice_mean']:.3f} -> "
          f"{dqc['dice_mean']:.3f} (p = {p:.2e}), gain {gain_dqc:.4f} > "
          f"random gain {gain_rand:.4f}; prevalence "
          f"{dqc['failure_prevalence']:.1%} < {rand['prevalence_mean']:.1%} "
          f"< {base['failure_prevalence']:.1%}; {elapsed:.0f}s < 300s")


def test_selected_frames_are_enriched_in_failures(hitl_report):
    """Frames picked by the quality ranking contain a higher share of failed
    segmentations than randomly picked frames (MC mean)."""
    guided = hitl_report["dqc"]["selected_prevalence"]
    random_mean = hitl_report["random"]["selected_prevalence_mean"]
    assert guided > random_mean
    print(f"[PASS] selected-frame enrichment: {guided:.1%} (guided) > "
          f"{random_mean:.1%} (random MC mean)")


def test_difficulty_screening_auc(corrupted_baseline, tmp_path):
    """Per-slice AUC of the quality series against hard-frame grades is high;
    shuffling the grades collapses it to chance."""
    report = run_difficulty_auc(corrupted_baseline, tmp_path / "difficulty",
                                shuffle_seed=0)
    assert report["n_valid"] == 20
    assert report["auc_mean"] > 0.8
    assert 0.35 <= report["control"]["auc_mean"] <= 0.65
    print(f"[PASS] difficulty AUC {report['auc_mean']:.3f} > 0.8; shuffled "
          f"control {report['control']['auc_mean']:.3f} in [0.35, 0.65]")


def test_fold_performance_and_memory():
    """Folding the dense 1089-patch pass (64x64x25 patches into 128x128x25
    accumulators) plus finalize stays under 10 s and 500 MB, backend cost
    excluded."""
    grid = build_grid((128, 128, 25), 64, 2)
    assert len(grid) == 1089
    patch = np.random.default_rng(0).random((25, 64, 64))
    acc = OverlapAccumulator((128, 128, 25))
    tracemalloc.start()
    t0 = time.perf_counter()
    for i in range(len(grid)):
        acc.fold_patch(grid, i, patch)
    mean, std = acc.finalize_mean(), acc.finalize_std()
    elapsed = time.perf_counter() - t0
    _, peak = tracemalloc.get_traced_memory()
    tracemalloc.stop()
    assert mean.shape == (25, 128, 128) and std.shape == (25, 128, 128)
    assert elapsed < 10.0
    assert peak < 500 * 1024 * 1024
    print(f"[PASS] 1089 folds + finalize in {elapsed:.2f}s "
          f"(< 10s), peak {peak / 1e6:.0f} MB (< 500 MB)")


def test_reports_are_byte_identical_on_rerun(corrupted_baseline, hitl_study,
                                             tmp_path):
    """Rerunning every study with identical seeds reproduces report.json
    byte for byte (and the referral/correction artifacts with it)."""
    from patchqc import run_baseline

    cfg = corrupted_baseline.config
    run_baseline(cfg["dataset"], tmp_path / "baseline", cfg["backend"],
                 cfg["grid"])
    first_dir = corrupted_baseline.run_dir
    assert (tmp_path / "baseline" / "report.json").read_bytes() == \
        (first_dir / "report.json").read_bytes()

    # a fresh rerun, rehydrated from disk, against the session study's files
    study_dir, _ = hitl_study
    reloaded = load_run(first_dir)
    run_hitl_comparison(reloaded, tmp_path / "hitl", budget=0.10, n_mc=100,
                        seed=101)
    for rel in ("report.json", "referrals.json", "corrections.json"):
        assert (tmp_path / "hitl" / rel).read_bytes() == \
            (study_dir / rel).read_bytes(), rel

    run_difficulty_auc(reloaded, tmp_path / "diff1", shuffle_seed=0)
    run_difficulty_auc(corrupted_baseline, tmp_path / "diff2", shuffle_seed=0)
    assert (tmp_path / "diff1" / "report.json").read_bytes() == \
        (tmp_path / "diff2" / "report.json").read_bytes()
    print("[PASS] baseline, review-comparison, and difficulty reruns are "
          "byte-identical (report.json, referrals.json, corrections.json)")
