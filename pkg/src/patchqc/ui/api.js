/** Typed client for the review service HTTP API.
 *
 * Non-finite frame-quality values travel as the string "inf"; parseQ maps
 * them back to Infinity so ranking and sparkline code can use plain numbers.
 */
export function parseQ(value) {
    if (typeof value === "number")
        return value;
    if (value === "inf")
        return Infinity;
    if (value === "-inf")
        return -Infinity;
    if (value === "nan")
        return NaN;
    const parsed = Number(value);
    if (value == null || Number.isNaN(parsed)) {
        throw new Error(`not a frame-quality value: ${String(value)}`);
    }
    return parsed;
}
export class ApiError extends Error {
    constructor(message, status) {
        super(message);
        this.status = status;
        this.name = "ApiError";
    }
}
async function asJson(resp) {
    let doc = null;
    try {
        doc = await resp.json();
    }
    catch {
        /* non-JSON error body; fall through to the status check */
    }
    if (!resp.ok) {
        const detail = doc && doc.error ? String(doc.error) : `HTTP ${resp.status}`;
        throw new ApiError(detail, resp.status);
    }
    return doc;
}
export class Api {
    constructor(base = "") {
        this.base = base;
    }
    url(path) {
        return this.base + path;
    }
    async referrals() {
        const doc = await asJson(await fetch(this.url("/api/referrals")));
        return doc.referrals.map((e) => ({
            slice: String(e.slice),
            t: Number(e.t),
            q_frame: parseQ(e.q_frame),
            rank: Number(e.rank),
            status: String(e.status),
        }));
    }
    async progress() {
        const doc = await asJson(await fetch(this.url("/api/progress")));
        return {
            total: Number(doc.total),
            pending: Number(doc.pending),
            accepted: Number(doc.accepted),
            corrected: Number(doc.corrected),
        };
    }
    async frame(slice, t) {
        const doc = await asJson(await fetch(this.url(`/api/frame/${encodeURIComponent(slice)}/${t}`)));
        return {
            ...doc,
            q_frame: parseQ(doc.q_frame),
            dice_2d: doc.dice_2d == null ? null : parseQ(doc.dice_2d),
        };
    }
    async series(slice) {
        const doc = await asJson(await fetch(this.url(`/api/series/${encodeURIComponent(slice)}`)));
        return {
            ...doc,
            q_frame: doc.q_frame.map(parseQ),
            q_slice: parseQ(doc.q_slice),
        };
    }
    async post(body) {
        const doc = await asJson(await fetch(this.url("/api/corrections"), {
            method: "POST",
            headers: { "Content-Type": "application/json" },
            body: JSON.stringify(body),
        }));
        return {
            ...doc,
            dice_2d: doc.dice_2d == null ? null : parseQ(doc.dice_2d),
        };
    }
    /** Accept the frame as-is; never sends mask data. */
    accept(slice, t) {
        return this.post({ slice, t, accept: true });
    }
    /** Submit a repainted mask as RLE runs. */
    submitMask(slice, t, runs) {
        return this.post({ slice, t, mask_rle: runs });
    }
}
