"""Command-line surface: dataset generation, segmentation runs, referral,
correction, evaluation, the packaged studies, and the review service.

Exit codes: 0 success, 1 domain error (bad data, missing files, degenerate
inputs), 2 usage error (argparse rejects the invocation).
"""

from __future__ import annotations

import argparse
import json
import sys
from pathlib import Path

try:
    import tomllib
except ModuleNotFoundError:          # Python < 3.11
    import tomli as tomllib

from .dqc import dice, frame_diagnostics
from .errors import PatchQcError
from .experiments import (load_run, run_baseline, run_difficulty_auc,
                          run_hitl_comparison, write_corrections, write_referrals)
from .hitl import (CorrectionRecord, ReferralPlan, apply_corrections,
                   oracle_correct, plan_referrals)
from .phantom import PhantomSpec, generate_dataset
from .service import serve
from .stats import format_mean_std, summarize
from .util import dump_json, parse_float


def _fraction(text: str) -> float:
    try:
        value = float(text)
    except ValueError:
        raise argparse.ArgumentTypeError(f"{text!r} is not a number")
    if not 0.0 < value <= 1.0:
        raise argparse.ArgumentTypeError(f"budget {value} outside (0, 1]")
    return value


def _grid_flags(parser: argparse.ArgumentParser) -> None:
    parser.add_argument("--seed", type=int, default=0,
                        help="seed threaded through generation and inference")
    parser.add_argument("--patch", type=int, default=64,
                        help="patch side length (default 64)")
    parser.add_argument("--stride-seg", type=int, default=16,
                        help="segmentation-pass stride (default 16)")
    parser.add_argument("--stride-map", type=int, default=2,
                        help="disagreement-map stride (default 2)")


def _backend_flags(parser: argparse.ArgumentParser) -> None:
    parser.add_argument("--backend", default="oracle-noise",
                        choices=("oracle-noise", "intensity", "external"))
    parser.add_argument("--bias-sigma", type=float, default=0.0)
    parser.add_argument("--field-sigma", type=float, default=0.0)
    parser.add_argument("--field-scale", type=float, default=8.0)
    parser.add_argument("--backend-seed", type=int, default=0)
    parser.add_argument("--corrupt-from-grades", metavar="MODE",
                        choices=("erase-half", "inflate"),
                        help="corrupt each slice's graded-hard frames with MODE")
    parser.add_argument("--lo", type=float, default=0.35,
                        help="intensity backend: band lower edge")
    parser.add_argument("--hi", type=float, default=0.75,
                        help="intensity backend: band upper edge")
    parser.add_argument("--tau", type=float, default=0.05,
                        help="intensity backend: band softness")
    parser.add_argument("--probs-dir", action="append", default=[],
                        metavar="STRIDE=DIR",
                        help="external backend: probability directory per stride")
    parser.add_argument("--config", type=Path,
                        help="TOML file with a [backend] table overriding the flags")


def _backend_config(args) -> dict:
    if args.backend == "oracle-noise":
        config = {"name": "oracle-noise", "bias_sigma": args.bias_sigma,
                  "field_sigma": args.field_sigma, "field_scale": args.field_scale,
                  "seed": args.backend_seed}
        if args.corrupt_from_grades:
            config["corrupt_from_grades"] = args.corrupt_from_grades
    elif args.backend == "intensity":
        config = {"name": "intensity", "lo": args.lo, "hi": args.hi, "tau": args.tau}
    else:
        dirs = {}
        for item in args.probs_dir:
            stride, _, directory = item.partition("=")
            dirs[int(stride)] = directory
        config = {"name": "external", "dirs": dirs}
    if args.config is not None:
        doc = tomllib.loads(args.config.read_text())
        config.update(doc.get("backend", doc))
    return config


def _grid_config(args) -> dict:
    return {"K": args.patch, "w_seg": args.stride_seg, "w_map": args.stride_map,
            "seed": args.seed}


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="patchqc",
        description="Patch-overlap segmentation fusion with disagreement maps, "
                    "uncertainty-guided review, and a correction service.")
    sub = parser.add_subparsers(dest="command", required=True)

    p_phantom = sub.add_parser("phantom", help="synthetic dataset tools")
    phantom_sub = p_phantom.add_subparsers(dest="phantom_command", required=True)
    p_gen = phantom_sub.add_parser("gen", help="generate a phantom dataset")
    p_gen.add_argument("--out", type=Path, required=True)
    p_gen.add_argument("--slices", type=int, default=20)
    p_gen.add_argument("--seed", type=int, default=0)
    p_gen.add_argument("--dims", type=int, nargs=3, default=(128, 128, 25),
                       metavar=("M", "N", "T"))
    p_gen.add_argument("--hard-frames", type=int, default=None, metavar="N",
                       help="graded hard frames per slice (omit for none)")
    p_gen.add_argument("--noise-sigma", type=float, default=0.02)

    p_seg = sub.add_parser("segment", help="run fusion over a dataset")
    p_seg.add_argument("--dataset", type=Path, required=True)
    p_seg.add_argument("--out", type=Path, required=True)
    _grid_flags(p_seg)
    _backend_flags(p_seg)

    p_refer = sub.add_parser("refer", help="plan a referral set for a run")
    p_refer.add_argument("--run", type=Path, required=True)
    p_refer.add_argument("--strategy", choices=("dqc", "random"), default="dqc")
    p_refer.add_argument("--budget", type=_fraction, default=0.10)
    p_refer.add_argument("--seed", type=int, default=0)
    p_refer.add_argument("--per-slice", action="store_true",
                         help="apply the budget within each slice instead of pooled")

    p_correct = sub.add_parser("correct", help="apply corrections to referred frames")
    p_correct.add_argument("--run", type=Path, required=True)
    p_correct.add_argument("--mode", choices=("oracle",), default="oracle")
    p_correct.add_argument("--dice-threshold", type=float, default=0.9)

    p_eval = sub.add_parser("evaluate", help="score a run (with corrections if present)")
    p_eval.add_argument("--run", type=Path, required=True)
    p_eval.add_argument("--corrections", type=Path, default=None,
                        help="corrections.json to apply (default: the run's)")

    p_exp = sub.add_parser("experiment", help="packaged studies")
    exp_sub = p_exp.add_subparsers(dest="experiment_command", required=True)
    e_base = exp_sub.add_parser("baseline", help="segment + evaluate a dataset")
    e_base.add_argument("--dataset", type=Path, required=True)
    e_base.add_argument("--out", type=Path, required=True)
    _grid_flags(e_base)
    _backend_flags(e_base)
    e_hitl = exp_sub.add_parser("hitl", help="guided vs random review comparison")
    e_hitl.add_argument("--run", type=Path, required=True)
    e_hitl.add_argument("--out", type=Path, required=True)
    e_hitl.add_argument("--budget", type=_fraction, default=0.10)
    e_hitl.add_argument("--mc", type=int, default=100)
    e_hitl.add_argument("--seed", type=int, default=0)
    e_hitl.add_argument("--per-slice", action="store_true")
    e_diff = exp_sub.add_parser("difficulty", help="quality-vs-grades screening")
    e_diff.add_argument("--run", type=Path, required=True)
    e_diff.add_argument("--out", type=Path, required=True)
    e_diff.add_argument("--shuffle-seed", type=int, default=0)

    p_serve = sub.add_parser("serve", help="serve the review UI for a run")
    p_serve.add_argument("--run", type=Path, required=True)
    p_serve.add_argument("--port", type=int, default=8080)
    p_serve.add_argument("--bind", default="127.0.0.1")
    p_serve.add_argument("--ui", type=Path, default=None,
                         help="static UI directory (default: packaged bundle)")
    return parser


def _cmd_phantom_gen(args) -> int:
    spec = PhantomSpec(dims=tuple(args.dims), noise_sigma=args.noise_sigma)
    records = generate_dataset(args.out, n_slices=args.slices, base_spec=spec,
                               seed=args.seed,
                               hard_frames_per_slice=args.hard_frames)
    frames = sum(r.image.dims[2] for r in records)
    print(f"wrote {len(records)} slices ({frames} frames) to {args.out}")
    return 0


def _cmd_segment(args) -> int:
    run = run_baseline(args.dataset, args.out, _backend_config(args),
                       _grid_config(args))
    print((args.out / "report.txt").read_text(), end="")
    print(f"run directory: {run.run_dir}")
    return 0


def _cmd_refer(args) -> int:
    run = load_run(args.run)
    plan = plan_referrals(run.qc_series, args.strategy, args.budget,
                          seed=args.seed, per_slice=args.per_slice)
    write_referrals(plan, args.run / "referrals.json")
    print(f"referred {len(plan.selected)} frames ({args.strategy}, "
          f"budget {args.budget:g}) -> {args.run / 'referrals.json'}")
    return 0


def _cmd_correct(args) -> int:
    run = load_run(args.run)
    ref_path = args.run / "referrals.json"
    if not ref_path.is_file():
        raise PatchQcError(f"{args.run} has no referrals.json; run `patchqc refer` first")
    doc = json.loads(ref_path.read_text())
    plan = ReferralPlan(
        strategy=doc["strategy"], budget_fraction=float(doc["budget"]),
        selected=tuple((e["slice"], int(e["t"])) for e in doc["selected"]),
        q_values=tuple(parse_float(e["q_frame"]) for e in doc["selected"]),
        seed=doc.get("seed"))
    records, _ = oracle_correct(plan, run.masks, run.truths,
                                dice_threshold=args.dice_threshold)
    write_corrections(records, args.run / "corrections.json")
    n_fixed = sum(r.corrected for r in records)
    print(f"reviewed {len(records)} frames, corrected {n_fixed} "
          f"-> {args.run / 'corrections.json'}")
    return 0


def _cmd_evaluate(args) -> int:
    run = load_run(args.run)
    corr_path = args.corrections or (args.run / "corrections.json")
    if args.corrections is not None and not corr_path.is_file():
        raise PatchQcError(f"corrections file {corr_path} does not exist")
    masks = run.masks
    n_records = 0
    if corr_path.is_file():
        records = [CorrectionRecord.from_jsonable(o)
                   for o in json.loads(corr_path.read_text())]
        n_records = len(records)
        masks = {sid: apply_corrections(mask, records, slice_id=sid)
                 for sid, mask in masks.items()}
    per_slice = {}
    frames = failed = 0
    for sid in sorted(masks):
        diags = frame_diagnostics(masks[sid])
        frames += len(diags)
        failed += sum(d.failed for d in diags)
        truth = run.truths.get(sid)
        per_slice[sid] = dice(masks[sid], truth) if truth is not None else None
    dices = [v for v in per_slice.values() if v is not None]
    result = {
        "version": 1,
        "corrections_applied": n_records,
        "dice": summarize(dices) if dices else None,
        "failure_prevalence": failed / frames if frames else 0.0,
        "failed_frames": failed,
        "frames": frames,
        "per_slice_dice": per_slice,
    }
    dump_json(result, args.run / "eval.json")
    if result["dice"] is not None:
        print(f"2D+time Dice:       "
              f"{format_mean_std(result['dice']['mean'], result['dice']['std'])}")
    print(f"failure prevalence: {100 * result['failure_prevalence']:.1f}% "
          f"({failed}/{frames})")
    print(f"wrote {args.run / 'eval.json'}")
    return 0


def _cmd_experiment(args) -> int:
    if args.experiment_command == "baseline":
        return _cmd_segment(args)
    if args.experiment_command == "hitl":
        run = load_run(args.run)
        run_hitl_comparison(run, args.out, budget=args.budget, n_mc=args.mc,
                            seed=args.seed, per_slice=args.per_slice)
    else:
        run = load_run(args.run)
        run_difficulty_auc(run, args.out, shuffle_seed=args.shuffle_seed)
    print((args.out / "report.txt").read_text(), end="")
    return 0


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        if args.command == "phantom":
            return _cmd_phantom_gen(args)
        if args.command == "segment":
            return _cmd_segment(args)
        if args.command == "refer":
            return _cmd_refer(args)
        if args.command == "correct":
            return _cmd_correct(args)
        if args.command == "evaluate":
            return _cmd_evaluate(args)
        if args.command == "experiment":
            return _cmd_experiment(args)
        if args.command == "serve":
            serve(args.run, bind=args.bind, port=args.port, ui_dir=args.ui)
            return 0
    except PatchQcError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    raise AssertionError(f"unhandled command {args.command!r}")


def run() -> None:
    sys.exit(main())


if __name__ == "__main__":
    run()
