"""Shared bits for the demo scripts: headless plotting, a compact phantom
configuration that keeps every demo under half a minute, and the output
directory convention (demos/out/<demo-name>/ unless --out is given)."""

from __future__ import annotations

import argparse
from pathlib import Path

import matplotlib

matplotlib.use("Agg")

from patchqc.phantom import PhantomSpec  # noqa: E402  (after backend select)

# Small frames keep the runtime friendly; radii scale with the frame so the
# ring still spans several patches.
SMALL_SPEC = PhantomSpec(dims=(64, 64, 8), radii=(8.0, 13.0))

# Patch geometry matched to the 64x64 frames: 16x16 patches, half-overlap
# for the segmentation pass, quarter-stride for the disagreement pass.
GRID = {"K": 16, "w_seg": 8, "w_map": 4}

# A segmentation backend that is good on easy frames but falls apart on the
# graded-hard ones (half the structure erased), so review has work to do.
NOISY_BACKEND = {
    "name": "oracle-noise",
    "bias_sigma": 1.0,
    "field_sigma": 0.5,
    "field_scale": 8,
    "seed": 23,
    "corrupt_from_grades": "erase-half",
}


def out_dir(default_name: str, description: str) -> Path:
    parser = argparse.ArgumentParser(description=description)
    parser.add_argument(
        "--out",
        type=Path,
        default=Path(__file__).resolve().parent / "out" / default_name,
        help="directory for figures and artifacts (default: demos/out/%(prog)s)",
    )
    args = parser.parse_args()
    args.out.mkdir(parents=True, exist_ok=True)
    return args.out


def save(fig, path: Path) -> None:
    fig.savefig(path, dpi=150, bbox_inches="tight")
    print(f"  wrote {path}")
