/** Run-length coding for binary masks, row-major.
 *
 * Runs alternate zero-valued and one-valued spans, starting with the zero
 * span (which may be 0 when the mask opens with foreground). The runs must
 * be non-negative integers and sum to the mask size. This mirrors the wire
 * format served and accepted by the review service, byte for byte.
 */
export function decodeRle(runs, size) {
    if (!Array.isArray(runs)) {
        throw new Error("RLE payload must be an array of run lengths");
    }
    const out = new Uint8Array(size);
    let pos = 0;
    let value = 0;
    for (const run of runs) {
        if (!Number.isInteger(run) || run < 0) {
            throw new Error(`run lengths must be non-negative integers, got ${run}`);
        }
        if (value === 1) {
            out.fill(1, pos, pos + run);
        }
        pos += run;
        value = 1 - value;
    }
    if (pos !== size) {
        throw new Error(`run lengths sum to ${pos}, expected ${size}`);
    }
    return out;
}
export function encodeRle(mask) {
    const runs = [];
    let value = 0;
    let run = 0;
    for (const bit of mask) {
        const b = bit ? 1 : 0;
        if (b === value) {
            run += 1;
        }
        else {
            runs.push(run);
            value = b;
            run = 1;
        }
    }
    runs.push(run);
    if (mask.length === 0) {
        return [];
    }
    return runs;
}
/** True when two RLE payloads denote the same mask bytes. */
export function sameRle(a, b, size) {
    const da = decodeRle(a, size);
    const db = decodeRle(b, size);
    for (let i = 0; i < size; i++) {
        if (da[i] !== db[i])
            return false;
    }
    return true;
}
