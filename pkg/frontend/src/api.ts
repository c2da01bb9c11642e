/** Typed client for the review service HTTP API.
 *
 * Non-finite frame-quality values travel as the string "inf"; parseQ maps
 * them back to Infinity so ranking and sparkline code can use plain numbers.
 */

export type Wire = number | string;

export interface Referral {
  slice: string;
  t: number;
  q_frame: number;
  rank: number;
  status: string;
}

export interface Progress {
  total: number;
  pending: number;
  accepted: number;
  corrected: number;
}

export interface FramePayload {
  slice: string;
  t: number;
  T: number;
  dims: [number, number];
  image_png: string;
  dqc_png: string;
  dqc_min: number;
  dqc_max: number;
  mask_rle: number[];
  q_frame: number;
  area: number;
  component_count: number;
  dice_2d: number | null;
  status: string;
  referred: boolean;
}

export interface SeriesPayload {
  slice: string;
  q_frame: number[];
  q_slice: number;
  area: number[];
  sentinel_count: number;
  referred_frames: number[];
}

export interface SubmitResult {
  slice: string;
  t: number;
  corrected: boolean;
  status: string;
  area: number;
  component_count: number;
  dice_2d: number | null;
  progress: Progress;
}

export function parseQ(value: Wire | null | undefined): number {
  if (typeof value === "number") return value;
  if (value === "inf") return Infinity;
  if (value === "-inf") return -Infinity;
  if (value === "nan") return NaN;
  const parsed = Number(value);
  if (value == null || Number.isNaN(parsed)) {
    throw new Error(`not a frame-quality value: ${String(value)}`);
  }
  return parsed;
}

export class ApiError extends Error {
  constructor(message: string, readonly status: number) {
    super(message);
    this.name = "ApiError";
  }
}

async function asJson(resp: Response): Promise<any> {
  let doc: any = null;
  try {
    doc = await resp.json();
  } catch {
    /* non-JSON error body; fall through to the status check */
  }
  if (!resp.ok) {
    const detail = doc && doc.error ? String(doc.error) : `HTTP ${resp.status}`;
    throw new ApiError(detail, resp.status);
  }
  return doc;
}

export class Api {
  constructor(readonly base: string = "") {}

  private url(path: string): string {
    return this.base + path;
  }

  async referrals(): Promise<Referral[]> {
    const doc = await asJson(await fetch(this.url("/api/referrals")));
    return (doc.referrals as any[]).map((e) => ({
      slice: String(e.slice),
      t: Number(e.t),
      q_frame: parseQ(e.q_frame),
      rank: Number(e.rank),
      status: String(e.status),
    }));
  }

  async progress(): Promise<Progress> {
    const doc = await asJson(await fetch(this.url("/api/progress")));
    return {
      total: Number(doc.total),
      pending: Number(doc.pending),
      accepted: Number(doc.accepted),
      corrected: Number(doc.corrected),
    };
  }

  async frame(slice: string, t: number): Promise<FramePayload> {
    const doc = await asJson(
      await fetch(this.url(`/api/frame/${encodeURIComponent(slice)}/${t}`)),
    );
    return {
      ...doc,
      q_frame: parseQ(doc.q_frame),
      dice_2d: doc.dice_2d == null ? null : parseQ(doc.dice_2d),
    } as FramePayload;
  }

  async series(slice: string): Promise<SeriesPayload> {
    const doc = await asJson(
      await fetch(this.url(`/api/series/${encodeURIComponent(slice)}`)),
    );
    return {
      ...doc,
      q_frame: (doc.q_frame as Wire[]).map(parseQ),
      q_slice: parseQ(doc.q_slice),
    } as SeriesPayload;
  }

  private async post(body: unknown): Promise<SubmitResult> {
    const doc = await asJson(
      await fetch(this.url("/api/corrections"), {
        method: "POST",
        headers: { "Content-Type": "application/json" },
        body: JSON.stringify(body),
      }),
    );
    return {
      ...doc,
      dice_2d: doc.dice_2d == null ? null : parseQ(doc.dice_2d),
    } as SubmitResult;
  }

  /** Accept the frame as-is; never sends mask data. */
  accept(slice: string, t: number): Promise<SubmitResult> {
    return this.post({ slice, t, accept: true });
  }

  /** Submit a repainted mask as RLE runs. */
  submitMask(slice: string, t: number, runs: number[]): Promise<SubmitResult> {
    return this.post({ slice, t, mask_rle: runs });
  }
}
