// @vitest-environment jsdom
//
// End-to-end review-loop test against the real HTTP service: a phantom
// dataset is built and segmented through the command line, the service is
// started on a free port, and the page is driven headlessly through the
// public App entry points plus DOM clicks. Verifies the full acceptance
// path: queue of >= 3 referrals, one accept, one repaint-and-submit,
// progress reflecting both, byte-identical mask round-trip, and displayed
// Dice equal to the server-recomputed value.

import { afterAll, beforeAll, describe, expect, it } from "vitest";
import { spawn, spawnSync } from "node:child_process";
import type { ChildProcessWithoutNullStreams } from "node:child_process";
import { mkdtempSync, rmSync } from "node:fs";
import { tmpdir } from "node:os";
import { join } from "node:path";

import type { FramePayload } from "../src/api.js";
import { createApp } from "../src/main.js";
import type { App } from "../src/main.js";
import { decodeRle } from "../src/rle.js";

const PY = process.env.PYTHON ?? "python3";

function cli(args: string[], cwd: string): void {
  const res = spawnSync(PY, ["-m", "patchqc.cli", ...args], {
    cwd,
    encoding: "utf8",
  });
  if (res.status !== 0) {
    throw new Error(
      `cli ${args.join(" ")} exited ${res.status}:\n${res.stdout}\n${res.stderr}`,
    );
  }
}

async function until(
  cond: () => boolean,
  what: string,
  ms = 20_000,
): Promise<void> {
  const t0 = Date.now();
  while (!cond()) {
    if (Date.now() - t0 > ms) throw new Error(`timed out waiting for ${what}`);
    await new Promise((resolve) => setTimeout(resolve, 25));
  }
}

function byTestId(id: string): HTMLElement {
  const el = document.querySelector(`[data-testid="${id}"]`);
  if (!el) throw new Error(`missing element [data-testid=${id}]`);
  return el as HTMLElement;
}

function allByTestId(id: string): HTMLElement[] {
  return [...document.querySelectorAll(`[data-testid="${id}"]`)] as HTMLElement[];
}

async function getJson(base: string, path: string): Promise<any> {
  const resp = await fetch(base + path);
  if (!resp.ok) throw new Error(`GET ${path} -> HTTP ${resp.status}`);
  return resp.json();
}

describe("review loop against the live service", () => {
  let tmp: string;
  let server: ChildProcessWithoutNullStreams | null = null;
  let base = "";
  let app: App;
  // frame the repaint test submits, shared with the round-trip checks
  let editedSlice = "";
  let editedT = -1;
  let submittedRuns: number[] = [];

  beforeAll(async () => {
    (HTMLCanvasElement.prototype as any).getContext = () => null;
    tmp = mkdtempSync(join(tmpdir(), "review-ui-"));
    cli(["phantom", "gen", "--out", "ds", "--slices", "2", "--seed", "9",
         "--dims", "64", "64", "6", "--hard-frames", "2"], tmp);
    cli(["segment", "--dataset", "ds", "--out", "run",
         "--patch", "16", "--stride-seg", "8", "--stride-map", "4",
         "--backend", "oracle-noise", "--bias-sigma", "1.0",
         "--field-sigma", "0.5", "--backend-seed", "23",
         "--corrupt-from-grades", "erase-half"], tmp);
    cli(["refer", "--run", "run", "--strategy", "dqc", "--budget", "0.5"], tmp);

    server = spawn(PY, ["-m", "patchqc.cli", "serve", "--run", "run",
                        "--port", "0"], { cwd: tmp });
    base = await new Promise<string>((resolve, reject) => {
      let seen = "";
      const fail = (why: string) =>
        reject(new Error(`service did not start (${why}):\n${seen}`));
      const timer = setTimeout(() => fail("timeout"), 30_000);
      server!.stdout.on("data", (chunk: Buffer) => {
        seen += chunk.toString();
        const m = seen.match(/on (http:\/\/[^\s]+)/);
        if (m) {
          clearTimeout(timer);
          resolve(m[1]);
        }
      });
      server!.stderr.on("data", (chunk: Buffer) => {
        seen += chunk.toString();
      });
      server!.on("exit", (code) => {
        clearTimeout(timer);
        fail(`exited ${code}`);
      });
    });

    document.body.innerHTML = '<div id="app"></div>';
    app = createApp({ base, toastMs: 0 });
    await app.init();
  });

  afterAll(async () => {
    if (server && server.exitCode === null) {
      server.kill("SIGTERM");
      await new Promise((resolve) => server!.once("exit", resolve));
    }
    rmSync(tmp, { recursive: true, force: true });
  });

  it("loads a queue of at least three pending referrals", async () => {
    await until(() => allByTestId("queue-row").length > 0, "queue rows");
    const rows = allByTestId("queue-row");
    expect(rows.length).toBeGreaterThanOrEqual(3);
    for (const badge of allByTestId("queue-badge")) {
      expect(badge.textContent).toBe("pending");
    }
    const progress = await getJson(base, "/api/progress");
    expect(progress.total).toBe(rows.length);
    expect(progress.pending).toBe(rows.length);
    expect(byTestId("progress").textContent).toContain(
      `0/${rows.length} reviewed`,
    );
  });

  it("accepts the worst-ranked referral as-is", async () => {
    const row = allByTestId("queue-row")[0];
    row.click();
    await until(() => !byTestId("editor").hidden, "editor to open");
    expect(byTestId("editor-title").textContent).toBe(
      `${row.dataset.slice} · frame ${row.dataset.t}`,
    );
    byTestId("btn-accept").click();
    await until(
      () => allByTestId("queue-badge")[0].textContent === "accepted",
      "accept confirmation",
    );
    const progress = await getJson(base, "/api/progress");
    expect(progress.accepted).toBe(1);
    expect(progress.corrected).toBe(0);
  });

  it("repaints the second referral and submits the mask", async () => {
    const row = allByTestId("queue-row")[1];
    editedSlice = row.dataset.slice!;
    editedT = Number(row.dataset.t);
    row.click();
    await until(
      () =>
        byTestId("editor-title").textContent ===
        `${editedSlice} · frame ${editedT}`,
      "second frame to open",
    );

    const model = app.model;
    const open = model.open!;
    const [, n] = open.payload.dims;
    model.brushSize = 1;
    const firstSet = open.buffer.indexOf(1);
    if (firstSet >= 0) {
      model.tool = "eraser";
      model.paint(Math.floor(firstSet / n), firstSet % n);
    } else {
      model.tool = "brush";
      model.paint(1, 1);
    }
    app.renderAll();
    expect(model.dirty()).toBe(true);
    submittedRuns = model.bufferRuns();

    byTestId("btn-submit").click();
    await until(
      () => allByTestId("queue-badge")[1].textContent === "corrected",
      "submit confirmation",
    );
    expect(model.dirty()).toBe(false);
  });

  it("reports both reviews in /api/progress", async () => {
    const progress = await getJson(base, "/api/progress");
    expect(progress.accepted).toBe(1);
    expect(progress.corrected).toBe(1);
    expect(progress.pending).toBe(progress.total - 2);
    // the page shows the same numbers without any reload
    expect(byTestId("progress").textContent).toBe(
      `2/${progress.total} reviewed · 1 accepted · 1 corrected · ` +
      `${progress.pending} pending`,
    );
  });

  it("round-trips the submitted mask byte-identically", async () => {
    const fresh: FramePayload = await getJson(
      base,
      `/api/frame/${editedSlice}/${editedT}`,
    );
    expect(fresh.mask_rle).toEqual(submittedRuns);
    const [m, n] = fresh.dims;
    expect(decodeRle(fresh.mask_rle, m * n)).toEqual(app.model.open!.buffer);
    expect(fresh.status).toBe("corrected");
  });

  it("displays exactly the Dice the server recomputes for the edit", async () => {
    const fresh = await getJson(base, `/api/frame/${editedSlice}/${editedT}`);
    expect(typeof fresh.dice_2d).toBe("number");
    const displayed = byTestId("editor-dice").dataset.dice;
    expect(displayed).toBeDefined();
    expect(Number(displayed)).toBe(fresh.dice_2d);
    expect(byTestId("editor-dice").textContent).toBe(
      `dice ${(fresh.dice_2d as number).toFixed(3)}`,
    );
  });
});
