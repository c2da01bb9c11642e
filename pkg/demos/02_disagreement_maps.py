#!/usr/bin/env python3
"""From patch disagreement to per-frame quality scores.

A noisy backend segments overlapping patches of one phantom slice twice:
a coarse-stride pass fused into the working mask, and a dense-stride pass
whose per-pixel standard deviation across overlapping patches becomes the
disagreement map. Averaging that map under the mask yields one quality
score per frame; empty masks get an infinite sentinel. Frames the backend
quietly ruined light up without any ground truth in the loop.
"""

from __future__ import annotations

import numpy as np

from _common import GRID, NOISY_BACKEND, out_dir, save
from patchqc.dqc import build_qc_series, compute_dqc_map, frame_diagnostics
from patchqc.experiments import make_backend
from patchqc.overlay import mask_contour
from patchqc.phantom import PhantomSpec, generate_slice


def main() -> None:
    out = out_dir("02_disagreement_maps", __doc__.splitlines()[0])
    import matplotlib.pyplot as plt

    spec = PhantomSpec(dims=(64, 64, 8), radii=(8.0, 13.0),
                       hard_frames=(2, 6), seed=7)
    rec = generate_slice(spec, "maps")
    backend = make_backend(dict(NOISY_BACKEND), [rec])
    mask, dmap = compute_dqc_map(rec.image, backend, K=GRID["K"],
                                 w_seg=GRID["w_seg"], w_map=GRID["w_map"],
                                 slice_id=rec.slice_id)
    qc = build_qc_series(rec.slice_id, dmap, mask)
    diags = frame_diagnostics(mask)
    T = rec.image.data.shape[0]
    print(f"slice {rec.slice_id}: {len(mask.bits)} frames, "
          f"disagreement map range [{dmap.min():.4f}, {dmap.max():.4f}]")

    # --- image / fused mask / disagreement map for four frames ------------
    show = [0, 2, 4, 6]                       # two easy, the two hard ones
    fig, axes = plt.subplots(3, len(show), figsize=(3.0 * len(show), 9))
    vmax = float(dmap.max()) or 1.0
    for col, t in enumerate(show):
        hard = bool(rec.grades[t])
        name = f"frame {t}" + (" (hard)" if hard else "")
        ax = axes[0, col]
        ax.imshow(rec.image.data[t], cmap="gray", interpolation="nearest")
        ax.set_title(name, color="tab:red" if hard else "black")
        ax = axes[1, col]
        ax.imshow(rec.image.data[t], cmap="gray", interpolation="nearest")
        ys, xs = np.nonzero(mask_contour(mask.bits[t]))
        ax.scatter(xs, ys, s=1.0, c="tab:orange", marker="s", linewidths=0)
        ax.set_title(f"fused mask ({diags[t].component_count} comp.)")
        ax = axes[2, col]
        im = ax.imshow(dmap[t], cmap="magma", interpolation="nearest",
                       vmin=0.0, vmax=vmax)
        ax.set_title(f"disagreement, q = {qc.q_frame[t]:.4f}")
    for ax in axes.flat:
        ax.set_axis_off()
    fig.colorbar(im, ax=axes[2, :].tolist(), shrink=0.85,
                 label="patch std dev")
    save(fig, out / "maps.png")
    plt.close(fig)

    # --- per-frame quality scores -----------------------------------------
    finite = np.isfinite(qc.q_frame)
    heights = np.where(finite, qc.q_frame, np.nanmax(qc.q_frame[finite]) * 1.3
                       if finite.any() else 1.0)
    colors = ["tab:red" if diags[t].failed else "tab:blue" for t in range(T)]
    fig, ax = plt.subplots(figsize=(7, 3.4))
    bars = ax.bar(np.arange(T), heights, color=colors)
    for t, bar in enumerate(bars):
        if not finite[t]:
            bar.set_hatch("//")
            ax.text(t, bar.get_height(), "empty", ha="center", va="bottom")
    ax.set_xlabel("frame")
    ax.set_ylabel("q (mean disagreement in mask)")
    ax.set_title("per-frame quality score; red = fragmented/failed frame")
    save(fig, out / "q_frame.png")
    plt.close(fig)

    print(f"{'frame':>5} {'hard':>4} {'area':>5} {'comps':>5} "
          f"{'failed':>6} {'q':>10}")
    for t in range(T):
        q = qc.q_frame[t]
        print(f"{t:>5} {int(rec.grades[t]):>4} {diags[t].area:>5} "
              f"{diags[t].component_count:>5} {str(bool(diags[t].failed)):>6} "
              f"{q:>10.4f}" if np.isfinite(q) else
              f"{t:>5} {int(rec.grades[t]):>4} {diags[t].area:>5} "
              f"{diags[t].component_count:>5} {str(bool(diags[t].failed)):>6} "
              f"{'inf':>10}")
    order = np.argsort(-qc.q_frame)
    print("frames ranked worst-first by q:", list(map(int, order)))


if __name__ == "__main__":
    main()
