"""Referral planning, expert corrections, and the random-selection baseline.

A referral plan picks round(budget * total_frames) frames for review. The
'dqc' strategy takes the globally most uncertain frames (per-frame quality
descending, sentinel/empty frames first, ties broken by slice id then frame
index); 'random' draws uniformly without replacement and is the control the
Monte Carlo baseline repeats under varied seeds.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .dqc import count_components, dice, frame_diagnostics
from .errors import ConfigError, ConflictError
from .rle import decode_rle, encode_rle

SOURCE_ORACLE = "oracle"
SOURCE_HUMAN = "human-ui"


@dataclass(frozen=True)
class ReferralPlan:
    strategy: str
    budget_fraction: float
    selected: tuple            # ((slice_id, t), ...) in rank order
    q_values: tuple            # q_frame value per selected entry
    seed: int | None = None


def _ranked(pool):
    # highest uncertainty first; (slice_id, t) ascending breaks exact ties
    return sorted(pool, key=lambda e: (-e[2], e[0], e[1]))


def plan_referrals(qc_series, strategy: str, budget_fraction: float,
                   seed: int | None = None, per_slice: bool = False) -> ReferralPlan:
    """Pick frames for human review.

    The budget counts frames over the pooled dataset by default; per_slice
    applies the same fraction within each slice instead. Random plans
    require a seed and are reproducible under it.
    """
    qc_series = list(qc_series)
    if not qc_series:
        raise ConfigError("cannot plan referrals for an empty dataset")
    if not 0.0 < budget_fraction <= 1.0:
        raise ConfigError(f"budget fraction {budget_fraction} outside (0, 1]")
    if strategy not in ("dqc", "random"):
        raise ConfigError(f"unknown referral strategy {strategy!r}")
    if strategy == "random" and seed is None:
        raise ConfigError("random strategy requires a seed")

    groups = [[s] for s in qc_series] if per_slice else [qc_series]
    picked = []
    for gi, group in enumerate(groups):
        pool = [(s.slice_id, t, float(s.q_frame[t]))
                for s in group for t in range(len(s.q_frame))]
        n_sel = int(math.floor(budget_fraction * len(pool) + 0.5))
        if strategy == "dqc":
            picked.extend(_ranked(pool)[:n_sel])
        else:
            rng = np.random.default_rng(seed if not per_slice else [seed, gi])
            idx = rng.choice(len(pool), size=n_sel, replace=False)
            picked.extend(_ranked([pool[i] for i in np.sort(idx)]))
    return ReferralPlan(strategy=strategy, budget_fraction=float(budget_fraction),
                        selected=tuple((sid, t) for sid, t, _ in picked),
                        q_values=tuple(q for _, _, q in picked), seed=seed)


@dataclass
class CorrectionRecord:
    """Outcome of one reviewed frame.

    corrected=False means the reviewer accepted the frame as-is, in which
    case mask_after equals mask_before. Oracle records carry no timestamp so
    replayed experiments serialize identically; human submissions get a real
    UTC stamp.
    """

    slice_id: str
    t: int
    corrected: bool
    mask_before: np.ndarray    # (M, N) uint8
    mask_after: np.ndarray
    source: str = SOURCE_ORACLE
    timestamp: str | None = None

    def to_jsonable(self) -> dict:
        M, N = self.mask_before.shape
        return {"slice": self.slice_id, "t": int(self.t), "corrected": bool(self.corrected),
                "source": self.source, "timestamp": self.timestamp, "dims": [int(M), int(N)],
                "mask_before_rle": encode_rle(self.mask_before),
                "mask_after_rle": encode_rle(self.mask_after)}

    @classmethod
    def from_jsonable(cls, obj: dict) -> "CorrectionRecord":
        M, N = (int(d) for d in obj["dims"])
        return cls(slice_id=obj["slice"], t=int(obj["t"]), corrected=bool(obj["corrected"]),
                   mask_before=decode_rle(obj["mask_before_rle"], (M, N)),
                   mask_after=decode_rle(obj["mask_after_rle"], (M, N)),
                   source=obj.get("source", SOURCE_ORACLE),
                   timestamp=obj.get("timestamp"))


def oracle_correct(plan: ReferralPlan, masks: dict, truths: dict,
                   dice_threshold: float = 0.9, connectivity: int = 8):
    """Replay an idealized expert over a referral plan.

    A frame is corrected (replaced by the truth frame) when its mask is not
    a single connected component or overlaps truth with 2D Dice below
    dice_threshold; otherwise the expert declines and leaves it untouched.
    Returns (records, corrected_masks); input masks are not modified.
    """
    out = {sid: m.copy() for sid, m in masks.items()}
    records = []
    for slice_id, t in plan.selected:
        truth = truths.get(slice_id)
        if truth is None:
            raise ConfigError(f"oracle correction needs ground truth for slice {slice_id!r}")
        mask = out.get(slice_id)
        if mask is None:
            raise ConfigError(f"no mask for referred slice {slice_id!r}")
        before = mask.bits[t].copy()
        truth_frame = truth.bits[t]
        bad = (count_components(before, connectivity) != 1
               or dice(before, truth_frame) < dice_threshold)
        if bad:
            mask.bits[t] = truth_frame
        records.append(CorrectionRecord(slice_id=slice_id, t=int(t), corrected=bool(bad),
                                        mask_before=before,
                                        mask_after=mask.bits[t].copy()))
    return records, out


def apply_corrections(mask, records, slice_id: str | None = None):
    """Apply corrected frames to one mask volume; untouched frames stay
    bit-identical. Duplicate records for a frame must agree on the outcome,
    otherwise the batch is contradictory."""
    out = mask.copy()
    seen: dict[int, np.ndarray] = {}
    for rec in records:
        if slice_id is not None and rec.slice_id != slice_id:
            continue
        if not 0 <= rec.t < mask.dims[2]:
            raise ConfigError(f"correction frame {rec.t} outside 0..{mask.dims[2] - 1}")
        prev = seen.get(rec.t)
        if prev is not None and not np.array_equal(prev, rec.mask_after):
            raise ConflictError(f"conflicting corrections for frame {rec.t}")
        seen[rec.t] = rec.mask_after
        if rec.corrected:
            out.bits[rec.t] = rec.mask_after
    return out


def evaluate_masks(masks: dict, truths: dict, connectivity: int = 8) -> dict:
    """Per-slice volume Dice plus pooled failed-frame prevalence."""
    dice_per_slice = {}
    failed = 0
    frames = 0
    for sid in sorted(masks):
        mask = masks[sid]
        diags = frame_diagnostics(mask, connectivity)
        failed += sum(d.failed for d in diags)
        frames += len(diags)
        truth = truths.get(sid)
        dice_per_slice[sid] = dice(mask, truth) if truth is not None else None
    return {"dice_per_slice": dice_per_slice,
            "failure_prevalence": failed / frames if frames else 0.0,
            "failed": failed, "frames": frames}


def selected_frame_stats(plan: ReferralPlan, masks: dict, truths: dict,
                         records=None, connectivity: int = 8) -> dict:
    """Failure prevalence and 2D Dice over just the referred frames,
    measured before correction; post-correction Dice when records given."""
    failed = 0
    dice_before = []
    dice_after = []
    after_by_frame = {}
    if records:
        after_by_frame = {(r.slice_id, r.t): r.mask_after for r in records}
    for slice_id, t in plan.selected:
        frame = masks[slice_id].bits[t]
        failed += count_components(frame, connectivity) != 1
        truth = truths.get(slice_id)
        if truth is not None:
            dice_before.append(dice(frame, truth.bits[t]))
            after = after_by_frame.get((slice_id, t))
            if after is not None:
                dice_after.append(dice(after, truth.bits[t]))
    n = len(plan.selected)
    out = {"selected": n, "failure_prevalence": failed / n if n else 0.0}
    if dice_before:
        out["dice_before_mean"] = float(np.mean(dice_before))
    if dice_after:
        out["dice_after_mean"] = float(np.mean(dice_after))
    return out


def monte_carlo_random(qc_series, truths: dict, masks: dict, budget: float,
                       n_runs: int = 100, seed0: int = 0, dice_threshold: float = 0.9,
                       connectivity: int = 8) -> dict:
    """Random-referral baseline repeated under seeds seed0, seed0+1, ...

    Each run plans a random referral set, applies oracle correction, and
    evaluates. Returns per-run arrays plus mean/std summaries, and keeps the
    first run's per-slice Dice so significance tests have a representative
    single run to compare against the baseline.
    """
    if n_runs < 1:
        raise ConfigError("n_runs must be >= 1")
    run_dice = []
    run_prevalence = []
    run_correction_rate = []
    run_selected_prevalence = []
    first_run_dice = None
    for r in range(n_runs):
        plan = plan_referrals(qc_series, "random", budget, seed=seed0 + r)
        sel = selected_frame_stats(plan, masks, truths, connectivity=connectivity)
        records, corrected = oracle_correct(plan, masks, truths, dice_threshold, connectivity)
        ev = evaluate_masks(corrected, truths, connectivity)
        dices = [v for _, v in sorted(ev["dice_per_slice"].items()) if v is not None]
        run_dice.append(float(np.mean(dices)))
        run_prevalence.append(ev["failure_prevalence"])
        run_correction_rate.append(
            float(np.mean([rec.corrected for rec in records])) if records else 0.0)
        run_selected_prevalence.append(sel["failure_prevalence"])
        if first_run_dice is None:
            first_run_dice = {sid: v for sid, v in ev["dice_per_slice"].items()}
    return {
        "n_runs": n_runs,
        "seed0": seed0,
        "dice_runs": run_dice,
        "prevalence_runs": run_prevalence,
        "dice_mean": float(np.mean(run_dice)),
        "dice_std": float(np.std(run_dice)),
        "prevalence_mean": float(np.mean(run_prevalence)),
        "prevalence_std": float(np.std(run_prevalence)),
        "correction_rate_mean": float(np.mean(run_correction_rate)),
        "selected_prevalence_mean": float(np.mean(run_selected_prevalence)),
        "first_run_dice_per_slice": first_run_dice,
    }
