"""Self-contained statistical primitives for the evaluation reports.

Nothing here knows about masks or maps: inputs are plain score/label/value
arrays. The AUC is the tie-aware rank statistic (identical to the
Mann-Whitney U normalization), the paired test is a two-sided sign-flip
permutation test, and summarize() reports population statistics.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import ConfigError, DegenerateError, ShapeError


def _average_ranks(values: np.ndarray) -> np.ndarray:
    """1-based ranks with ties sharing their average rank."""
    order = np.argsort(values, kind="mergesort")
    ranks = np.empty(values.size, dtype=np.float64)
    i = 0
    while i < values.size:
        j = i
        while j + 1 < values.size and values[order[j + 1]] == values[order[i]]:
            j += 1
        ranks[order[i:j + 1]] = 0.5 * (i + j) + 1.0
        i = j + 1
    return ranks


@dataclass(frozen=True)
class RocResult:
    thresholds: np.ndarray   # distinct scores, descending
    tpr: np.ndarray
    fpr: np.ndarray
    auc: float


def auc(scores, labels) -> RocResult:
    """Rank-based ROC analysis.

    The area equals P(score_pos > score_neg) + 0.5 * P(score_pos ==
    score_neg), so it is invariant under any strictly monotone transform of
    the scores. Labels must contain both classes.
    """
    s = np.asarray(scores, dtype=np.float64)
    y = np.asarray(labels)
    if s.shape != y.shape or s.ndim != 1:
        raise ShapeError(f"scores {s.shape} and labels {y.shape} must be equal-length 1-D")
    if not np.isin(y, (0, 1)).all():
        raise ConfigError("labels must be 0 or 1")
    y = y.astype(int)
    n_pos = int((y == 1).sum())
    n_neg = int((y == 0).sum())
    if n_pos == 0 or n_neg == 0:
        raise DegenerateError("AUC needs both classes present")
    ranks = _average_ranks(s)
    area = (ranks[y == 1].sum() - n_pos * (n_pos + 1) / 2.0) / (n_pos * n_neg)
    thresholds = np.unique(s)[::-1]
    pos_sorted = np.sort(s[y == 1])
    neg_sorted = np.sort(s[y == 0])
    tpr = 1.0 - np.searchsorted(pos_sorted, thresholds, side="left") / n_pos
    fpr = 1.0 - np.searchsorted(neg_sorted, thresholds, side="left") / n_neg
    return RocResult(thresholds=thresholds, tpr=tpr, fpr=fpr, auc=float(area))


def paired_permutation_test(x, y, n_perm: int = 10_000, seed: int = 0) -> float:
    """Two-sided sign-flip test of mean(x - y) == 0.

    p = (1 + #{flips with |mean| >= |observed|}) / (n_perm + 1); the
    identity permutation counts once, so p never drops below 1/(n_perm+1)
    and equals 1.0 when x == y elementwise.
    """
    a = np.asarray(x, dtype=np.float64)
    b = np.asarray(y, dtype=np.float64)
    if a.shape != b.shape:
        raise ShapeError(f"paired samples differ: {a.shape} vs {b.shape}")
    if a.ndim != 1 or a.size < 2:
        raise DegenerateError("need at least 2 paired values")
    if n_perm < 1:
        raise ConfigError("n_perm must be >= 1")
    d = a - b
    m0 = abs(float(d.mean()))
    tol = 1e-12 * max(m0, 1.0)
    rng = np.random.default_rng(seed)
    hits = 0
    done = 0
    while done < n_perm:
        k = min(4096, n_perm - done)
        signs = rng.integers(0, 2, size=(k, d.size)) * 2 - 1
        means = np.abs((signs * d).mean(axis=1))
        hits += int((means >= m0 - tol).sum())
        done += k
    return (1 + hits) / (n_perm + 1)


def summarize(values) -> dict:
    """Mean, population std, min, max, n. Empty input is an error."""
    v = np.asarray(values, dtype=np.float64)
    if v.size == 0:
        raise DegenerateError("cannot summarize an empty sequence")
    return {"mean": float(v.mean()), "std": float(v.std()),
            "min": float(v.min()), "max": float(v.max()), "n": int(v.size)}


def format_mean_std(mean: float, std: float) -> str:
    """Render a summary the way result tables expect it, e.g. '0.767 ± 0.042'."""
    return f"{mean:.3f} ± {std:.3f}"
