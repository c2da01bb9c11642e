// @vitest-environment jsdom

import { beforeAll, beforeEach, describe, expect, it } from "vitest";

import { Api, ApiError } from "../src/api.js";
import type {
  FramePayload,
  Progress,
  Referral,
  SeriesPayload,
  SubmitResult,
} from "../src/api.js";
import { App } from "../src/main.js";
import { encodeRle } from "../src/rle.js";

type Call =
  | { kind: "accept"; slice: string; t: number }
  | { kind: "submit"; slice: string; t: number; runs: number[] };

function squareMask(): Uint8Array {
  const bits = new Uint8Array(8 * 8);
  for (let y = 2; y <= 5; y++) {
    for (let x = 2; x <= 5; x++) bits[y * 8 + x] = 1;
  }
  return bits;
}

class FakeApi extends Api {
  referralsData: Referral[] = [];
  frames = new Map<string, FramePayload>();
  seriesData = new Map<string, SeriesPayload>();
  calls: Call[] = [];
  referralFetches = 0;
  failAll = false;
  failNextSubmit = false;

  constructor() {
    super("");
  }

  private check(): void {
    if (this.failAll) throw new ApiError("connection refused", 0);
  }

  private progressNow(): Progress {
    const total = this.referralsData.length;
    const accepted = this.referralsData.filter((r) => r.status === "accepted").length;
    const corrected = this.referralsData.filter((r) => r.status === "corrected").length;
    return { total, pending: total - accepted - corrected, accepted, corrected };
  }

  override async referrals(): Promise<Referral[]> {
    this.check();
    this.referralFetches += 1;
    return this.referralsData.map((r) => ({ ...r }));
  }

  override async progress(): Promise<Progress> {
    this.check();
    return this.progressNow();
  }

  override async frame(slice: string, t: number): Promise<FramePayload> {
    this.check();
    const payload = this.frames.get(`${slice}/${t}`);
    if (!payload) throw new ApiError("no such frame", 404);
    return { ...payload, mask_rle: [...payload.mask_rle] };
  }

  override async series(slice: string): Promise<SeriesPayload> {
    this.check();
    const payload = this.seriesData.get(slice);
    if (!payload) throw new ApiError("no such slice", 404);
    return { ...payload, q_frame: [...payload.q_frame] };
  }

  private conclude(
    slice: string,
    t: number,
    status: string,
    extra: Partial<SubmitResult>,
  ): SubmitResult {
    for (const row of this.referralsData) {
      if (row.slice === slice && row.t === t) row.status = status;
    }
    const frame = this.frames.get(`${slice}/${t}`)!;
    frame.status = status;
    return {
      slice,
      t,
      corrected: status === "corrected",
      status,
      area: frame.area,
      component_count: frame.component_count,
      dice_2d: frame.dice_2d,
      ...extra,
      progress: this.progressNow(),
    };
  }

  override async accept(slice: string, t: number): Promise<SubmitResult> {
    this.check();
    this.calls.push({ kind: "accept", slice, t });
    return this.conclude(slice, t, "accepted", {});
  }

  override async submitMask(
    slice: string,
    t: number,
    runs: number[],
  ): Promise<SubmitResult> {
    this.check();
    if (this.failNextSubmit) {
      this.failNextSubmit = false;
      throw new ApiError("disk full", 500);
    }
    this.calls.push({ kind: "submit", slice, t, runs: [...runs] });
    const frame = this.frames.get(`${slice}/${t}`)!;
    frame.mask_rle = [...runs];
    const area = runs.filter((_, i) => i % 2 === 1).reduce((a, b) => a + b, 0);
    frame.area = area;
    frame.dice_2d = 0.75;
    return this.conclude(slice, t, "corrected", {});
  }
}

function seedFake(api: FakeApi): void {
  const mask = squareMask();
  api.referralsData = [
    { slice: "slice_00", t: 3, q_frame: 0.42, rank: 1, status: "pending" },
    { slice: "slice_01", t: 0, q_frame: 0.3, rank: 2, status: "pending" },
    { slice: "slice_00", t: 1, q_frame: 0.11, rank: 3, status: "pending" },
  ];
  const base: Omit<FramePayload, "slice" | "t" | "q_frame"> = {
    T: 4,
    dims: [8, 8],
    image_png: "",
    dqc_png: "",
    dqc_min: 0,
    dqc_max: 0.9,
    mask_rle: encodeRle(mask),
    area: 16,
    component_count: 1,
    dice_2d: 0.9,
    status: "pending",
    referred: true,
  };
  for (const row of api.referralsData) {
    api.frames.set(`${row.slice}/${row.t}`, {
      ...base,
      slice: row.slice,
      t: row.t,
      q_frame: row.q_frame,
      mask_rle: [...base.mask_rle],
    });
  }
  // context frames around the first referral for scrubbing
  for (const t of [0, 1, 2]) {
    if (!api.frames.has(`slice_00/${t}`)) {
      api.frames.set(`slice_00/${t}`, {
        ...base,
        slice: "slice_00",
        t,
        q_frame: 0.01,
        mask_rle: [...base.mask_rle],
        referred: false,
      });
    }
  }
  api.seriesData.set("slice_00", {
    slice: "slice_00",
    q_frame: [0.01, 0.11, 0.02, 0.42],
    q_slice: 0.14,
    area: [16, 16, 16, 16],
    sentinel_count: 0,
    referred_frames: [1, 3],
  });
  api.seriesData.set("slice_01", {
    slice: "slice_01",
    q_frame: [0.3, 0.0, 0.0, 0.0],
    q_slice: 0.075,
    area: [16, 16, 16, 16],
    sentinel_count: 0,
    referred_frames: [0],
  });
}

const flush = () => new Promise((resolve) => setTimeout(resolve, 0));

function byTestId(root: ParentNode, id: string): HTMLElement {
  const el = root.querySelector(`[data-testid="${id}"]`);
  if (!el) throw new Error(`missing element [data-testid=${id}]`);
  return el as HTMLElement;
}

function allByTestId(root: ParentNode, id: string): HTMLElement[] {
  return [...root.querySelectorAll(`[data-testid="${id}"]`)] as HTMLElement[];
}

describe("review app", () => {
  let api: FakeApi;
  let root: HTMLElement;
  let app: App;

  beforeAll(() => {
    // headless DOM has no 2D canvas; the app guards for a null context
    (HTMLCanvasElement.prototype as any).getContext = () => null;
  });

  beforeEach(() => {
    document.body.innerHTML = "";
    root = document.createElement("div");
    root.id = "app";
    document.body.appendChild(root);
    api = new FakeApi();
    seedFake(api);
    app = new App({ api, root, toastMs: 0 });
  });

  async function openFirstReferral(): Promise<void> {
    await app.init();
    allByTestId(root, "queue-row")[0].click();
    await flush();
  }

  it("renders an empty queue as a message, not an error", async () => {
    api.referralsData = [];
    await app.init();
    expect(byTestId(root, "queue-empty").textContent).toBe("no referrals");
    expect(byTestId(root, "progress").textContent).toContain("0/0 reviewed");
  });

  it("lists referrals worst-first with status badges and progress", async () => {
    await app.init();
    const rows = allByTestId(root, "queue-row");
    expect(rows.length).toBe(3);
    expect(rows.map((r) => `${r.dataset.slice}/${r.dataset.t}`)).toEqual([
      "slice_00/3", "slice_01/0", "slice_00/1",
    ]);
    expect(rows[0].textContent).toContain("#1");
    expect(rows[0].textContent).toContain("q 0.420");
    for (const badge of allByTestId(root, "queue-badge")) {
      expect(badge.textContent).toBe("pending");
    }
    expect(byTestId(root, "progress").textContent).toBe(
      "0/3 reviewed · 0 accepted · 0 corrected · 3 pending",
    );
  });

  it("opens the selected frame in the editor with its series context", async () => {
    await openFirstReferral();
    const editor = byTestId(root, "editor");
    expect(editor.hidden).toBe(false);
    expect(byTestId(root, "editor-title").textContent).toBe(
      "slice_00 · frame 3",
    );
    expect(byTestId(root, "editor-info").textContent).toBe(
      "q 0.420 · area 16 px · 1 component",
    );
    expect(byTestId(root, "editor-dice").dataset.dice).toBe("0.9");
    expect(byTestId(root, "scrub-label").textContent).toBe("t = 3 / 3");
    expect(byTestId(root, "readonly-note").hidden).toBe(true);
    expect(root.querySelector(".sparkline")).not.toBeNull();
    expect(byTestId(root, "sparkline-current")).toBeTruthy();
    const selected = root.querySelector(".queue-row.selected") as HTMLElement;
    expect(selected.dataset.slice).toBe("slice_00");
    expect(selected.dataset.t).toBe("3");
  });

  it("accept sends no mask bytes and updates the badge without a reload", async () => {
    await openFirstReferral();
    const fetchesBefore = api.referralFetches;
    byTestId(root, "btn-accept").click();
    await flush();
    expect(api.calls).toEqual([{ kind: "accept", slice: "slice_00", t: 3 }]);
    expect(api.referralFetches).toBe(fetchesBefore); // no queue refetch
    const rows = allByTestId(root, "queue-row");
    expect(byTestId(rows[0], "queue-badge").textContent).toBe("accepted");
    expect(byTestId(rows[1], "queue-badge").textContent).toBe("pending");
    expect(byTestId(root, "progress").textContent).toBe(
      "1/3 reviewed · 1 accepted · 0 corrected · 2 pending",
    );
    expect(byTestId(root, "editor-status").textContent).toBe(
      "status: accepted",
    );
  });

  it("overlay toggle and opacity style the heatmap without touching the mask", async () => {
    await openFirstReferral();
    const heatmap = root.querySelector(".layer-heatmap") as HTMLElement;
    const toggle = byTestId(root, "heatmap-toggle") as HTMLInputElement;
    const opacity = byTestId(root, "heatmap-opacity") as HTMLInputElement;
    expect(heatmap.style.opacity).toBe("0.45");

    app.model.tool = "eraser";
    app.model.brushSize = 1;
    app.model.paint(3, 3);
    app.renderAll();
    const runsBefore = app.model.bufferRuns();

    toggle.checked = false;
    toggle.dispatchEvent(new Event("input", { bubbles: true }));
    expect(heatmap.style.opacity).toBe("0");
    opacity.value = "80";
    opacity.dispatchEvent(new Event("input", { bubbles: true }));
    expect(heatmap.style.opacity).toBe("0");
    toggle.checked = true;
    toggle.dispatchEvent(new Event("input", { bubbles: true }));
    expect(heatmap.style.opacity).toBe("0.8");

    expect(app.model.bufferRuns()).toEqual(runsBefore);
    byTestId(root, "btn-submit").click();
    await flush();
    const submit = api.calls.find((c) => c.kind === "submit");
    expect(submit && submit.kind === "submit" && submit.runs).toEqual(
      runsBefore,
    );
  });

  it("keeps local edits and shows a toast when submit fails", async () => {
    await openFirstReferral();
    app.model.tool = "eraser";
    app.model.brushSize = 1;
    app.model.paint(3, 3);
    app.renderAll();
    const edited = app.model.open!.buffer.slice();
    expect(app.model.dirty()).toBe(true);

    api.failNextSubmit = true;
    byTestId(root, "btn-submit").click();
    await flush();
    const toasts = allByTestId(root, "toast");
    expect(toasts.length).toBe(1);
    expect(toasts[0].textContent).toContain("submit failed");
    expect(toasts[0].textContent).toContain("disk full");
    expect(app.model.dirty()).toBe(true);
    expect(app.model.open!.buffer).toEqual(edited);
    expect(allByTestId(root, "queue-badge")[0].textContent).toBe("pending");

    byTestId(root, "btn-submit").click();
    await flush();
    expect(app.model.dirty()).toBe(false);
    expect(allByTestId(root, "queue-badge")[0].textContent).toBe("corrected");
    expect(
      (byTestId(root, "btn-submit") as HTMLButtonElement).disabled,
    ).toBe(true);
    expect(byTestId(root, "progress").textContent).toBe(
      "1/3 reviewed · 0 accepted · 1 corrected · 2 pending",
    );
    expect(byTestId(root, "editor-dice").dataset.dice).toBe("0.75");
  });

  it("shows the error banner when the service is down and recovers on retry", async () => {
    api.failAll = true;
    await app.init();
    const banner = byTestId(root, "error-banner");
    expect(banner.hidden).toBe(false);
    expect(banner.textContent).toContain("service unreachable");
    expect(banner.textContent).toContain("connection refused");

    api.failAll = false;
    byTestId(root, "btn-retry").click();
    await flush();
    expect(banner.hidden).toBe(true);
    expect(allByTestId(root, "queue-row").length).toBe(3);
  });

  it("scrubbing shows read-only context frames and re-enables editing back home", async () => {
    await openFirstReferral();
    byTestId(root, "scrub-prev").click();
    await flush();
    expect(byTestId(root, "scrub-label").textContent).toBe("t = 2 / 3");
    expect(byTestId(root, "readonly-note").hidden).toBe(false);
    expect(
      (byTestId(root, "btn-submit") as HTMLButtonElement).disabled,
    ).toBe(true);
    expect(
      (byTestId(root, "btn-accept") as HTMLButtonElement).disabled,
    ).toBe(true);
    // painting while scrubbed is ignored
    app.model.paint(3, 3);
    expect(app.model.dirty()).toBe(false);

    byTestId(root, "scrub-next").click();
    await flush();
    expect(byTestId(root, "scrub-label").textContent).toBe("t = 3 / 3");
    expect(byTestId(root, "readonly-note").hidden).toBe(true);
    expect(
      (byTestId(root, "btn-accept") as HTMLButtonElement).disabled,
    ).toBe(false);
    // scrubbing past the end is clamped
    byTestId(root, "scrub-next").click();
    await flush();
    expect(byTestId(root, "scrub-label").textContent).toBe("t = 3 / 3");
  });
});
