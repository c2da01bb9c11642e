/** Client state for one review session, free of DOM concerns.
 *
 * The editing buffer is a copy of the frame's served mask; the served bytes
 * are kept untouched so "dirty" means an exact byte difference and Reset is
 * always lossless. Nothing here talks to the network: callers hand results
 * back in (applySubmitResult) so optimistic flows stay in one place.
 */

import type { FramePayload, Progress, Referral, SubmitResult } from "./api.js";
import { decodeRle, encodeRle } from "./rle.js";

export type Tool = "brush" | "eraser";

export interface OpenFrame {
  payload: FramePayload;
  /** Served mask bytes; never mutated. */
  original: Uint8Array;
  /** Editing buffer the brush mutates. */
  buffer: Uint8Array;
  /** Frame shown by the scrubber; edits apply only at payload.t. */
  viewT: number;
}

export class ReviewModel {
  queue: Referral[] = [];
  progress: Progress | null = null;
  open: OpenFrame | null = null;
  tool: Tool = "brush";
  brushSize = 3;

  setQueue(queue: Referral[]): void {
    this.queue = [...queue].sort((a, b) => a.rank - b.rank);
  }

  openFrame(payload: FramePayload): void {
    const [m, n] = payload.dims;
    const original = decodeRle(payload.mask_rle, m * n);
    this.open = {
      payload,
      original,
      buffer: original.slice(),
      viewT: payload.t,
    };
  }

  closeFrame(): void {
    this.open = null;
  }

  /** True when the buffer differs from the served mask in any byte. */
  dirty(): boolean {
    if (!this.open) return false;
    const { original, buffer } = this.open;
    for (let i = 0; i < original.length; i++) {
      if (original[i] !== buffer[i]) return true;
    }
    return false;
  }

  /** Paint a filled circle of the active tool at mask coords (row, col). */
  paint(row: number, col: number): void {
    if (!this.open || this.open.viewT !== this.open.payload.t) return;
    const [m, n] = this.open.payload.dims;
    const value = this.tool === "brush" ? 1 : 0;
    const r = this.brushSize;
    const r2 = r * r;
    const top = Math.max(0, Math.ceil(row - r));
    const bottom = Math.min(m - 1, Math.floor(row + r));
    for (let y = top; y <= bottom; y++) {
      const dy = y - row;
      const span = Math.sqrt(Math.max(0, r2 - dy * dy));
      const left = Math.max(0, Math.ceil(col - span));
      const right = Math.min(n - 1, Math.floor(col + span));
      for (let x = left; x <= right; x++) {
        this.open.buffer[y * n + x] = value;
      }
    }
  }

  resetEdits(): void {
    if (this.open) this.open.buffer = this.open.original.slice();
  }

  /** RLE runs for the current buffer — the exact submit payload. */
  bufferRuns(): number[] {
    if (!this.open) throw new Error("no frame open");
    return encodeRle(this.open.buffer);
  }

  /** Fold a server confirmation back into queue, progress, and the open
   * frame; the buffer becomes the new served baseline. */
  applySubmitResult(result: SubmitResult): void {
    this.progress = result.progress;
    for (const item of this.queue) {
      if (item.slice === result.slice && item.t === result.t) {
        item.status = result.status;
      }
    }
    if (
      this.open &&
      this.open.payload.slice === result.slice &&
      this.open.payload.t === result.t
    ) {
      this.open.payload.status = result.status;
      this.open.payload.area = result.area;
      this.open.payload.component_count = result.component_count;
      this.open.payload.dice_2d = result.dice_2d;
      this.open.original = this.open.buffer.slice();
      this.open.payload.mask_rle = encodeRle(this.open.original);
    }
  }

  /** 1-valued border pixels of the buffer (4-neighbour erosion difference),
   * as flat indices — the contour burned over the image. */
  contourIndices(): number[] {
    if (!this.open) return [];
    const [m, n] = this.open.payload.dims;
    const b = this.open.buffer;
    const out: number[] = [];
    for (let y = 0; y < m; y++) {
      for (let x = 0; x < n; x++) {
        const i = y * n + x;
        if (!b[i]) continue;
        if (
          y === 0 || y === m - 1 || x === 0 || x === n - 1 ||
          !b[i - n] || !b[i + n] || !b[i - 1] || !b[i + 1]
        ) {
          out.push(i);
        }
      }
    }
    return out;
  }
}
