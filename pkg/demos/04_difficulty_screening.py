#!/usr/bin/env python3
"""Screening hard frames with the quality score alone.

Each phantom slice carries per-frame difficulty grades (which frames were
deliberately degraded). This demo asks how well the per-frame quality
score — computed with no ground truth — separates hard frames from easy
ones, slice by slice, measured as ranking AUC against a shuffled-grade
control.
"""

from __future__ import annotations

import json

import numpy as np

from _common import GRID, NOISY_BACKEND, SMALL_SPEC, out_dir, save
from patchqc.experiments import run_baseline, run_difficulty_auc
from patchqc.phantom import generate_dataset


def main() -> None:
    out = out_dir("04_difficulty_screening", __doc__.splitlines()[0])
    import matplotlib.pyplot as plt

    generate_dataset(out / "dataset", n_slices=8, base_spec=SMALL_SPEC,
                     seed=29, hard_frames_per_slice=2)
    run = run_baseline(out / "dataset", out / "baseline",
                       dict(NOISY_BACKEND), dict(GRID))
    report = run_difficulty_auc(run, out / "difficulty")
    print(f"difficulty screening over {report['n_valid']} graded slices "
          f"({report['n_skipped']} skipped):")
    print(f"  AUC (quality vs grades)      {report['auc_mean']:.3f} "
          f"+/- {report['auc_std']:.3f}")
    ctrl = report["control"]
    print(f"  AUC (shuffled-grade control) {ctrl['auc_mean']:.3f} "
          f"+/- {ctrl['auc_std']:.3f}")

    # --- per-slice AUC against the shuffled control ------------------------
    rows = [e for e in report["per_slice"] if not e["skipped"]]
    labels = [e["slice_id"] for e in rows]
    x = np.arange(len(rows))
    fig, (ax1, ax2) = plt.subplots(1, 2, figsize=(11.5, 4.2))
    ax1.bar(x - 0.2, [e["auc"] for e in rows], width=0.4,
            color="tab:red", label="quality score")
    ax1.bar(x + 0.2, [e["control_auc"] for e in rows], width=0.4,
            color="tab:gray", label="shuffled grades")
    ax1.axhline(0.5, color="black", lw=1, ls=":")
    ax1.set_xticks(x, labels, rotation=45, ha="right", fontsize=8)
    ax1.set_ylim(0, 1.05)
    ax1.set_ylabel("ranking AUC (hard above easy)")
    ax1.set_title("per-slice separation of graded-hard frames")
    ax1.legend(fontsize=9)

    # --- pooled quality scores by grade ------------------------------------
    rng = np.random.default_rng(0)
    for grade, color, label in ((0, "tab:blue", "easy frames"),
                                (1, "tab:red", "hard frames")):
        qs = np.concatenate([
            np.asarray(o.qc.q_frame)[np.asarray(run.grades[o.slice_id]) == grade]
            for o in run.outcomes if o.slice_id in run.grades])
        finite = qs[np.isfinite(qs)]
        jitter = rng.uniform(-0.12, 0.12, size=finite.size)
        ax2.scatter(np.full(finite.size, grade) + jitter, finite, s=14,
                    alpha=0.7, color=color, label=label)
        n_inf = int(np.isinf(qs).sum())
        if n_inf:
            ax2.annotate(f"+{n_inf} empty (ranked worst)",
                         (grade, finite.max()), textcoords="offset points",
                         xytext=(0, 12), ha="center", color=color, fontsize=8)
    ax2.set_xticks([0, 1], ["easy", "hard"])
    ax2.set_ylabel("q (mean disagreement in mask)")
    ax2.set_title("quality scores pooled over all slices")
    ax2.legend(fontsize=9)
    fig.tight_layout()
    save(fig, out / "screening.png")
    plt.close(fig)

    print(f"  full report: {out / 'difficulty' / 'report.json'}")
    head = json.loads((out / "difficulty" / "report.json").read_text())
    assert head["auc_mean"] == report["auc_mean"]


if __name__ == "__main__":
    main()
