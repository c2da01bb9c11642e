"""End-to-end studies over a dataset: baseline evaluation, uncertainty-guided
vs random review comparison, and difficulty screening.

Every study is a pure function of (dataset, config, seeds): rerunning with
the same inputs writes byte-identical report.json files. Artifacts land in
the run directory so the CLI stages and the review service can pick up where
a previous process stopped.
"""

from __future__ import annotations

import csv
import io
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .backends import (ExternalProbsBackend, IntensityBandBackend, NoiseProfile,
                       OracleNoiseBackend)
from .dqc import QcSeries, build_qc_series, compute_dqc_map, dice, frame_diagnostics
from .errors import ConfigError, DegenerateError
from .hitl import (monte_carlo_random, oracle_correct, plan_referrals,
                   selected_frame_stats)
from .overlay import overlay_png
from .stats import auc, format_mean_std, paired_permutation_test, summarize
from .util import atomic_write_text, dump_json, parse_float
from .volumes import read_dataset, read_mask, read_volume, write_volume

REPORT_VERSION = 1

DEFAULT_GRID = {"K": 64, "w_seg": 16, "w_map": 2, "seed": 0}
DEFAULT_BACKEND = {"name": "oracle-noise"}


def make_backend(config: dict | None, records):
    """Build a segmenter backend from a plain config dict.

    name 'oracle-noise' reads each record's truth; bias_sigma, field_sigma,
    field_scale, seed, and corrupt_frames ([frame, mode] pairs applied to
    every slice) pass through to the noise profile, and corrupt_from_grades
    (a mode string) instead corrupts each slice's graded-hard frames.
    name 'intensity' takes lo/hi/tau; name 'external' takes dirs mapping
    stride -> directory of per-patch probability files.
    """
    config = dict(DEFAULT_BACKEND if config is None else config)
    name = config.pop("name", "oracle-noise")
    if name == "oracle-noise":
        grade_mode = config.pop("corrupt_from_grades", None)
        shared = config.pop("corrupt_frames", ())
        base = NoiseProfile(corrupt_frames=tuple((int(t), str(m)) for t, m in shared),
                            **{k: config[k] for k in ("bias_sigma", "field_sigma",
                                                      "field_scale", "seed")
                               if k in config})
        truths = {}
        for rec in records:
            if rec.truth is None:
                raise ConfigError(f"oracle-noise backend needs truth for slice {rec.slice_id!r}")
            truths[rec.slice_id] = rec.truth
        if grade_mode is None:
            return OracleNoiseBackend(truths, base)
        profiles = {}
        for rec in records:
            grades = rec.grades or []
            hard = tuple((t, str(grade_mode)) for t, g in enumerate(grades) if g)
            profiles[rec.slice_id] = NoiseProfile(
                bias_sigma=base.bias_sigma, field_sigma=base.field_sigma,
                field_scale=base.field_scale, seed=base.seed,
                corrupt_frames=base.corrupt_frames + hard)
        return OracleNoiseBackend(truths, profiles)
    if name == "intensity":
        return IntensityBandBackend(**{k: config[k] for k in ("lo", "hi", "tau")
                                       if k in config})
    if name == "external":
        dirs = config.get("dirs")
        if not dirs:
            raise ConfigError("external backend needs dirs: {stride: directory}")
        return ExternalProbsBackend(dirs)
    raise ConfigError(f"unknown backend {name!r}")


@dataclass
class SliceOutcome:
    """Everything the studies need about one processed slice."""

    slice_id: str
    mask: object                      # SegmentationMask
    dqc_map: np.ndarray               # float64 (T, M, N)
    qc: QcSeries
    diagnostics: list
    dice_volume: float | None
    dice_frames: list | None


@dataclass
class BaselineRun:
    """A baseline evaluation: per-slice outcomes plus the on-disk artifacts."""

    run_dir: Path
    config: dict
    outcomes: list[SliceOutcome]
    images: dict = field(default_factory=dict)
    truths: dict = field(default_factory=dict)
    grades: dict = field(default_factory=dict)
    report: dict = field(default_factory=dict)

    @property
    def masks(self) -> dict:
        return {o.slice_id: o.mask for o in self.outcomes}

    @property
    def qc_series(self) -> list[QcSeries]:
        return [o.qc for o in self.outcomes]


def _baseline_report(config: dict, outcomes: list[SliceOutcome]) -> dict:
    frames = sum(len(o.diagnostics) for o in outcomes)
    failed = sum(d.failed for o in outcomes for d in o.diagnostics)
    per_slice = [{
        "slice_id": o.slice_id,
        "dice": o.dice_volume,
        "q_slice": o.qc.q_slice,
        "sentinel_count": o.qc.sentinel_count,
        "failed_frames": sum(d.failed for d in o.diagnostics),
    } for o in outcomes]
    dices = [o.dice_volume for o in outcomes if o.dice_volume is not None]
    report = {
        "version": REPORT_VERSION,
        "experiment": "baseline",
        "config": config,
        "n_slices": len(outcomes),
        "frames": frames,
        "failed_frames": failed,
        "failure_prevalence": failed / frames if frames else 0.0,
        "per_slice": per_slice,
    }
    report["dice"] = summarize(dices) if dices else None
    return report


def _baseline_text(report: dict) -> str:
    lines = ["Baseline evaluation", ""]
    lines.append(f"slices: {report['n_slices']}   frames: {report['frames']}")
    if report["dice"] is not None:
        d = report["dice"]
        lines.append(f"2D+time Dice:        {format_mean_std(d['mean'], d['std'])}")
    lines.append(f"failure prevalence:  {100 * report['failure_prevalence']:.1f}% "
                 f"({report['failed_frames']}/{report['frames']})")
    return "\n".join(lines) + "\n"


def run_baseline(dataset_root, out_dir, backend_config: dict | None = None,
                 grid_config: dict | None = None) -> BaselineRun:
    """Segment every slice, build its disagreement map and QC series, and
    write the full run directory (masks/, dqc/, qc.json, metrics.csv,
    config.json, report.json, report.txt)."""
    grid = dict(DEFAULT_GRID)
    grid.update(grid_config or {})
    backend_config = dict(DEFAULT_BACKEND if backend_config is None else backend_config)
    out_dir = Path(out_dir)
    records = sorted(read_dataset(dataset_root), key=lambda r: r.slice_id)
    backend = make_backend(backend_config, records)

    outcomes = []
    images, truths, grades = {}, {}, {}
    for rec in records:
        mask, dqc_map = compute_dqc_map(
            rec.image, backend, K=grid["K"], w_seg=grid["w_seg"],
            w_map=grid["w_map"], slice_id=rec.slice_id, seed=grid["seed"])
        qc = build_qc_series(rec.slice_id, dqc_map, mask)
        diags = frame_diagnostics(mask)
        dice_volume = dice_frames = None
        if rec.truth is not None:
            dice_volume = dice(mask, rec.truth)
            dice_frames = [dice(mask.bits[t], rec.truth.bits[t])
                           for t in range(mask.dims[2])]
            truths[rec.slice_id] = rec.truth
        images[rec.slice_id] = rec.image
        if rec.grades is not None:
            grades[rec.slice_id] = list(rec.grades)
        outcomes.append(SliceOutcome(rec.slice_id, mask, dqc_map, qc, diags,
                                     dice_volume, dice_frames))
        write_volume(mask, out_dir / "masks" / f"{rec.slice_id}.u8")
        write_volume(dqc_map.astype(np.float32), out_dir / "dqc" / f"{rec.slice_id}.f32")

    config = {"version": 1, "dataset": str(Path(dataset_root)),
              "backend": backend_config, "grid": grid}
    dump_json(config, out_dir / "config.json")
    dump_json({"version": 1, "slices": [{
        "slice_id": o.slice_id, "q_frame": o.qc.q_frame, "q_slice": o.qc.q_slice,
        "area": o.qc.area, "sentinel_count": o.qc.sentinel_count,
    } for o in outcomes]}, out_dir / "qc.json")

    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(["slice_id", "t", "area", "component_count", "failed",
                     "q_frame", "dice_2d"])
    for o in outcomes:
        for t, d in enumerate(o.diagnostics):
            q = o.qc.q_frame[t]
            writer.writerow([o.slice_id, t, d.area, d.component_count,
                             int(d.failed), "inf" if np.isinf(q) else repr(float(q)),
                             "" if o.dice_frames is None else repr(float(o.dice_frames[t]))])
    atomic_write_text(out_dir / "metrics.csv", buf.getvalue())

    report = _baseline_report(config, outcomes)
    dump_json(report, out_dir / "report.json")
    atomic_write_text(out_dir / "report.txt", _baseline_text(report))
    return BaselineRun(run_dir=out_dir, config=config, outcomes=outcomes,
                       images=images, truths=truths, grades=grades, report=report)


def load_run(run_dir) -> BaselineRun:
    """Rehydrate a run directory written by run_baseline.

    The dataset recorded in config.json supplies images, truth, and grades;
    QC values come from qc.json (not recomputed), so referral order is
    exactly what the original run saw.
    """
    import json

    run_dir = Path(run_dir)
    cfg_path = run_dir / "config.json"
    if not cfg_path.is_file():
        raise ConfigError(f"{run_dir} is not a run directory (missing config.json)")
    config = json.loads(cfg_path.read_text())
    report = json.loads((run_dir / "report.json").read_text())
    qc_doc = json.loads((run_dir / "qc.json").read_text())
    records = sorted(read_dataset(config["dataset"]), key=lambda r: r.slice_id)
    by_id = {r.slice_id: r for r in records}

    outcomes = []
    images, truths, grades = {}, {}, {}
    for entry in qc_doc["slices"]:
        sid = entry["slice_id"]
        rec = by_id.get(sid)
        if rec is None:
            raise ConfigError(f"run references slice {sid!r} absent from the dataset")
        M, N, T = rec.image.dims
        mask = read_mask(run_dir / "masks" / f"{sid}.u8", (M, N, T))
        dqc_map = read_volume(run_dir / "dqc" / f"{sid}.f32", (M, N, T),
                              kind="dqc").data.astype(np.float64)
        qc = QcSeries(slice_id=sid,
                      q_frame=np.array([parse_float(v) for v in entry["q_frame"]]),
                      q_slice=parse_float(entry["q_slice"]),
                      area=np.asarray(entry["area"]),
                      sentinel_count=int(entry["sentinel_count"]))
        diags = frame_diagnostics(mask)
        dice_volume = dice_frames = None
        if rec.truth is not None:
            dice_volume = dice(mask, rec.truth)
            dice_frames = [dice(mask.bits[t], rec.truth.bits[t]) for t in range(T)]
            truths[sid] = rec.truth
        images[sid] = rec.image
        if rec.grades is not None:
            grades[sid] = list(rec.grades)
        outcomes.append(SliceOutcome(sid, mask, dqc_map, qc, diags,
                                     dice_volume, dice_frames))
    return BaselineRun(run_dir=run_dir, config=config, outcomes=outcomes,
                       images=images, truths=truths, grades=grades, report=report)


def _require_truth(run: BaselineRun) -> None:
    if not run.truths or any(o.slice_id not in run.truths for o in run.outcomes):
        raise ConfigError("this study needs ground truth for every slice")


def write_referrals(plan, out_path) -> None:
    dump_json({
        "version": 1,
        "strategy": plan.strategy,
        "budget": plan.budget_fraction,
        "seed": plan.seed,
        "selected": [{"slice": sid, "t": t, "q_frame": q, "rank": rank}
                     for rank, ((sid, t), q)
                     in enumerate(zip(plan.selected, plan.q_values), start=1)],
    }, out_path)


def write_corrections(records, out_path) -> None:
    dump_json([rec.to_jsonable() for rec in records], out_path)


def _hitl_text(report: dict) -> str:
    b, r, d = report["baseline"], report["random"], report["dqc"]
    pct = lambda x: f"{100 * x:.1f}%"
    lines = [
        f"Review comparison (budget {pct(report['budget_fraction'])}, "
        f"{report['n_mc']} Monte Carlo runs)",
        "",
        "approach            2D+time Dice     failure prevalence",
        f"baseline            {format_mean_std(b['dice_mean'], b['dice_std'])}"
        f"    {pct(b['failure_prevalence'])}",
        f"random (MC mean)    {format_mean_std(r['dice_mean'], r['dice_std'])}"
        f"    {pct(r['prevalence_mean'])}",
        f"dqc-guided          {format_mean_std(d['dice_mean'], d['dice_std'])}"
        f"    {pct(d['failure_prevalence'])}",
        "",
        "referred frames only     prevalence    correction rate",
        f"dqc-guided               {pct(d['selected_prevalence'])}"
        f"         {pct(d['correction_rate'])}",
        f"random (MC mean)         {pct(r['selected_prevalence_mean'])}"
        f"         {pct(r['correction_rate_mean'])}",
        "",
        f"p (dqc vs baseline)    = {report['p_values']['dqc_vs_baseline']:.6g}",
        f"p (random vs baseline) = {report['p_values']['random_vs_baseline']:.6g}",
    ]
    return "\n".join(lines) + "\n"


def run_hitl_comparison(run: BaselineRun, out_dir, budget: float = 0.10,
                        n_mc: int = 100, seed: int = 0, per_slice: bool = False,
                        n_perm: int = 10_000, max_overlays: int = 24) -> dict:
    """Compare uncertainty-guided referral against the random baseline.

    Plans the dqc referral, applies oracle corrections, repeats the random
    strategy over n_mc seeded runs, and writes referrals.json,
    corrections.json, overlay snapshots, report.json, and report.txt into
    out_dir. Baseline numbers are copied from the run so the two reports
    agree exactly.
    """
    _require_truth(run)
    out_dir = Path(out_dir)
    masks = run.masks
    qc_series = run.qc_series
    baseline_per_slice = {o.slice_id: o.dice_volume for o in run.outcomes}
    baseline_dice = summarize([v for v in baseline_per_slice.values()])

    plan = plan_referrals(qc_series, "dqc", budget, seed=seed, per_slice=per_slice)
    records, corrected = oracle_correct(plan, masks, run.truths)
    sel = selected_frame_stats(plan, masks, run.truths, records)
    dqc_frames = sum(len(o.diagnostics) for o in run.outcomes)
    dqc_diags = {sid: frame_diagnostics(m) for sid, m in corrected.items()}
    dqc_failed = sum(d.failed for diags in dqc_diags.values() for d in diags)
    dqc_per_slice = {sid: dice(corrected[sid], run.truths[sid]) for sid in corrected}
    dqc_dice = summarize(list(dqc_per_slice.values()))

    mc = monte_carlo_random(qc_series, run.truths, masks, budget,
                            n_runs=n_mc, seed0=seed)

    order = sorted(baseline_per_slice)
    base_vec = [baseline_per_slice[sid] for sid in order]
    dqc_vec = [dqc_per_slice[sid] for sid in order]
    rand_vec = [mc["first_run_dice_per_slice"][sid] for sid in order]
    p_dqc = paired_permutation_test(dqc_vec, base_vec, n_perm=n_perm, seed=seed)
    p_rand = paired_permutation_test(rand_vec, base_vec, n_perm=n_perm, seed=seed)

    report = {
        "version": REPORT_VERSION,
        "experiment": "hitl",
        "budget_fraction": float(budget),
        "n_mc": int(n_mc),
        "seed": int(seed),
        "per_slice_budget": bool(per_slice),
        "n_selected": len(plan.selected),
        "baseline": {
            "dice_mean": run.report["dice"]["mean"],
            "dice_std": run.report["dice"]["std"],
            "failure_prevalence": run.report["failure_prevalence"],
            "per_slice_dice": {sid: baseline_per_slice[sid] for sid in order},
        },
        "dqc": {
            "dice_mean": dqc_dice["mean"],
            "dice_std": dqc_dice["std"],
            "failure_prevalence": dqc_failed / dqc_frames if dqc_frames else 0.0,
            "correction_rate": (float(np.mean([r.corrected for r in records]))
                                if records else 0.0),
            "selected_prevalence": sel["failure_prevalence"],
            "selected_dice_before": sel.get("dice_before_mean"),
            "selected_dice_after": sel.get("dice_after_mean"),
            "per_slice_dice": {sid: dqc_per_slice[sid] for sid in order},
        },
        "random": {
            "dice_mean": mc["dice_mean"],
            "dice_std": mc["dice_std"],
            "prevalence_mean": mc["prevalence_mean"],
            "prevalence_std": mc["prevalence_std"],
            "correction_rate_mean": mc["correction_rate_mean"],
            "selected_prevalence_mean": mc["selected_prevalence_mean"],
            "first_run_per_slice_dice": mc["first_run_dice_per_slice"],
        },
        "p_values": {"dqc_vs_baseline": p_dqc, "random_vs_baseline": p_rand},
    }
    assert baseline_dice["mean"] == run.report["dice"]["mean"]

    write_referrals(plan, out_dir / "referrals.json")
    write_corrections(records, out_dir / "corrections.json")
    dqc_by_id = {o.slice_id: o.dqc_map for o in run.outcomes}
    for rank, (sid, t) in enumerate(plan.selected[:max_overlays], start=1):
        png = overlay_png(run.images[sid].data[t], masks[sid].bits[t],
                          dqc_by_id[sid][t])
        path = out_dir / "overlays" / f"rank{rank:03d}_{sid}_t{t:02d}.png"
        path.parent.mkdir(parents=True, exist_ok=True)
        path.write_bytes(png)
    dump_json(report, out_dir / "report.json")
    atomic_write_text(out_dir / "report.txt", _hitl_text(report))
    return report


def _difficulty_text(report: dict) -> str:
    lines = ["Difficulty screening (per-frame quality vs hard-frame grades)", ""]
    lines.append(f"valid slices: {report['n_valid']}   skipped: {report['n_skipped']}")
    lines.append(f"mean AUC:          {format_mean_std(report['auc_mean'], report['auc_std'])}")
    c = report["control"]
    lines.append(f"shuffled control:  {format_mean_std(c['auc_mean'], c['auc_std'])}"
                 f"   (seed {c['shuffle_seed']})")
    return "\n".join(lines) + "\n"


def run_difficulty_auc(run: BaselineRun, out_dir, shuffle_seed: int = 0) -> dict:
    """Score how well the per-frame quality series separates graded-hard
    frames from easy ones, slice by slice, against a shuffled-grade control.

    Slices whose grades are single-class are skipped; if every slice is
    skipped the study is degenerate. Higher quality values must indicate
    harder frames, so scores enter the AUC as-is (sentinel frames rank top).
    """
    out_dir = Path(out_dir)
    graded = [o for o in run.outcomes if o.slice_id in run.grades]
    if not graded:
        raise DegenerateError("no slice carries difficulty grades")

    per_slice = []
    values, control_values = [], []
    for idx, o in enumerate(graded):
        labels = np.asarray(run.grades[o.slice_id], dtype=int)
        entry = {"slice_id": o.slice_id, "n_hard": int(labels.sum()),
                 "auc": None, "control_auc": None, "skipped": False}
        if labels.min() == labels.max():
            entry["skipped"] = True
        else:
            entry["auc"] = auc(o.qc.q_frame, labels).auc
            values.append(entry["auc"])
            rng = np.random.default_rng([shuffle_seed, idx])
            shuffled = labels.copy()
            rng.shuffle(shuffled)
            entry["control_auc"] = auc(o.qc.q_frame, shuffled).auc
            control_values.append(entry["control_auc"])
        per_slice.append(entry)
    if not values:
        raise DegenerateError("every graded slice is single-class; no AUC defined")

    got = summarize(values)
    ctrl = summarize(control_values)
    report = {
        "version": REPORT_VERSION,
        "experiment": "difficulty",
        "n_valid": len(values),
        "n_skipped": len(per_slice) - len(values),
        "auc_mean": got["mean"],
        "auc_std": got["std"],
        "per_slice": per_slice,
        "control": {"shuffle_seed": int(shuffle_seed),
                    "auc_mean": ctrl["mean"], "auc_std": ctrl["std"]},
    }
    dump_json(report, out_dir / "report.json")
    atomic_write_text(out_dir / "report.txt", _difficulty_text(report))
    return report
