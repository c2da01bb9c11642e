import { describe, expect, it } from "vitest";

import type { FramePayload, SubmitResult } from "../src/api.js";
import { ReviewModel } from "../src/model.js";
import { decodeRle, encodeRle } from "../src/rle.js";

function payload(overrides: Partial<FramePayload> = {}): FramePayload {
  const bits = new Uint8Array(8 * 8);
  for (let y = 2; y <= 5; y++) {
    for (let x = 2; x <= 5; x++) bits[y * 8 + x] = 1;
  }
  return {
    slice: "s0",
    t: 1,
    T: 4,
    dims: [8, 8],
    image_png: "",
    dqc_png: "",
    dqc_min: 0,
    dqc_max: 1,
    mask_rle: encodeRle(bits),
    q_frame: 0.25,
    area: 16,
    component_count: 1,
    dice_2d: 0.9,
    status: "pending",
    referred: true,
    ...overrides,
  };
}

describe("review model", () => {
  it("orders the queue by rank regardless of arrival order", () => {
    const model = new ReviewModel();
    model.setQueue([
      { slice: "b", t: 0, q_frame: 0.1, rank: 2, status: "pending" },
      { slice: "a", t: 3, q_frame: Infinity, rank: 1, status: "pending" },
    ]);
    expect(model.queue.map((r) => r.rank)).toEqual([1, 2]);
  });

  it("opens a frame with an independent editing buffer", () => {
    const model = new ReviewModel();
    model.openFrame(payload());
    expect(model.dirty()).toBe(false);
    model.tool = "eraser";
    model.brushSize = 1;
    model.paint(3, 3);
    expect(model.dirty()).toBe(true);
    expect(model.open!.buffer[3 * 8 + 3]).toBe(0);
    // the served copy is untouched
    expect(model.open!.original[3 * 8 + 3]).toBe(1);
    model.resetEdits();
    expect(model.dirty()).toBe(false);
  });

  it("paints a filled disc clipped at the borders", () => {
    const model = new ReviewModel();
    model.openFrame(payload({ mask_rle: [64], area: 0 }));
    model.tool = "brush";
    model.brushSize = 2;
    model.paint(0, 0);
    const buffer = model.open!.buffer;
    expect(buffer[0]).toBe(1);
    expect(buffer[2]).toBe(1);            // (0,2) on the rim
    expect(buffer[2 * 8 + 2]).toBe(0);    // outside radius 2
    const total = buffer.reduce((a, b) => a + b, 0);
    expect(total).toBeGreaterThan(3);
  });

  it("ignores paint while scrubbed onto a context frame", () => {
    const model = new ReviewModel();
    model.openFrame(payload());
    model.open!.viewT = 2;                // context view, not the referred t
    model.paint(3, 3);
    expect(model.dirty()).toBe(false);
  });

  it("emits submit payloads that round-trip the buffer exactly", () => {
    const model = new ReviewModel();
    model.openFrame(payload());
    model.tool = "brush";
    model.brushSize = 1;
    model.paint(0, 7);
    const runs = model.bufferRuns();
    expect(decodeRle(runs, 64)).toEqual(model.open!.buffer);
  });

  it("folds a server confirmation into queue, progress, and baseline", () => {
    const model = new ReviewModel();
    model.setQueue([
      { slice: "s0", t: 1, q_frame: 0.25, rank: 1, status: "pending" },
      { slice: "s0", t: 2, q_frame: 0.10, rank: 2, status: "pending" },
    ]);
    model.openFrame(payload());
    model.tool = "eraser";
    model.paint(3, 3);
    const edited = model.open!.buffer.slice();
    const result: SubmitResult = {
      slice: "s0",
      t: 1,
      corrected: true,
      status: "corrected",
      area: 4,
      component_count: 2,
      dice_2d: 0.5,
      progress: { total: 2, pending: 1, accepted: 0, corrected: 1 },
    };
    model.applySubmitResult(result);
    expect(model.queue[0].status).toBe("corrected");
    expect(model.queue[1].status).toBe("pending");
    expect(model.progress!.corrected).toBe(1);
    expect(model.open!.payload.dice_2d).toBe(0.5);
    // the edit is the new baseline: no longer dirty, same bytes
    expect(model.dirty()).toBe(false);
    expect(model.open!.original).toEqual(edited);
  });

  it("reports contour cells only on the mask boundary", () => {
    const model = new ReviewModel();
    model.openFrame(payload());
    const contour = new Set(model.contourIndices());
    expect(contour.has(2 * 8 + 2)).toBe(true);   // corner of the square
    expect(contour.has(3 * 8 + 3)).toBe(false);  // interior
    expect(contour.size).toBe(12);               // 4x4 square boundary
  });
});
