/** Application wiring: one queue, one editor, one Api — optimistic updates
 * confirmed by the server response, errors surfaced without losing edits. */
import { Api, ApiError } from "./api.js";
import { buildEditor, paintMask, paintReadonlyMask, renderEditor, } from "./editor.js";
import { ReviewModel } from "./model.js";
import { renderProgress, renderQueue } from "./queue.js";
import { decodeRle } from "./rle.js";
export class App {
    constructor(options = {}) {
        this.model = new ReviewModel();
        this.series = null;
        this.contextFrame = null;
        this.api = options.api ?? new Api(options.base ?? "");
        this.toastMs = options.toastMs ?? 4000;
        const root = options.root ?? document.getElementById("app");
        if (!root)
            throw new Error("no #app element to mount into");
        root.textContent = "";
        const header = document.createElement("header");
        const title = document.createElement("h1");
        title.textContent = "segmentation review";
        const progress = document.createElement("p");
        progress.id = "progress";
        progress.setAttribute("data-testid", "progress");
        header.append(title, progress);
        const banner = document.createElement("div");
        banner.id = "error-banner";
        banner.setAttribute("data-testid", "error-banner");
        banner.hidden = true;
        const bannerMessage = document.createElement("span");
        const retry = document.createElement("button");
        retry.type = "button";
        retry.textContent = "retry";
        retry.setAttribute("data-testid", "btn-retry");
        retry.addEventListener("click", () => void this.init());
        banner.append(bannerMessage, retry);
        const queue = document.createElement("section");
        queue.id = "queue";
        queue.setAttribute("data-testid", "queue");
        const toast = document.createElement("div");
        toast.id = "toast";
        const editor = buildEditor(this.model, {
            onAccept: () => void this.accept(),
            onSubmit: () => void this.submit(),
            onReset: () => this.reset(),
            onScrub: (dt) => void this.scrub(dt),
            onPainted: () => this.renderAll(),
        });
        const main = document.createElement("main");
        main.append(queue, editor.root);
        root.append(header, banner, main, toast);
        this.elements = {
            root, progress, banner, bannerMessage, retry, queue, toast, editor,
        };
    }
    async init() {
        try {
            await this.refresh();
            this.elements.banner.hidden = true;
        }
        catch (err) {
            this.showBanner(err);
        }
    }
    /** Re-fetch queue and progress; keeps the open frame untouched. */
    async refresh() {
        const [queue, progress] = await Promise.all([
            this.api.referrals(),
            this.api.progress(),
        ]);
        this.model.setQueue(queue);
        this.model.progress = progress;
        this.renderAll();
    }
    async selectReferral(item) {
        try {
            const payload = await this.api.frame(item.slice, item.t);
            this.model.openFrame(payload);
            this.contextFrame = null;
            this.series = await this.api.series(item.slice);
            this.renderAll();
        }
        catch (err) {
            this.showBanner(err);
        }
    }
    /** Accept the frame as-is; sends no mask bytes. */
    async accept() {
        const open = this.model.open;
        if (!open)
            return;
        try {
            const result = await this.api.accept(open.payload.slice, open.payload.t);
            this.model.resetEdits();
            this.model.applySubmitResult(result);
            this.renderAll();
        }
        catch (err) {
            this.toast(`accept failed: ${message(err)}`);
        }
    }
    /** Submit the edited mask; on failure local edits are kept as-is. */
    async submit() {
        const open = this.model.open;
        if (!open)
            return;
        try {
            const runs = this.model.bufferRuns();
            const result = await this.api.submitMask(open.payload.slice, open.payload.t, runs);
            this.model.applySubmitResult(result);
            this.renderAll();
        }
        catch (err) {
            if (err instanceof ApiError && err.status === 409) {
                this.toast("conflicting edit on the server; reloading frame");
                await this.selectReferral(open.payload);
                return;
            }
            this.toast(`submit failed: ${message(err)}`);
        }
    }
    reset() {
        this.model.resetEdits();
        this.renderAll();
    }
    /** Move the temporal scrubber; frames other than the referred one are
     * fetched for context and shown read-only. */
    async scrub(dt) {
        const open = this.model.open;
        if (!open)
            return;
        const next = Math.min(open.payload.T - 1, Math.max(0, open.viewT + dt));
        if (next === open.viewT)
            return;
        open.viewT = next;
        try {
            this.contextFrame = next === open.payload.t
                ? null
                : await this.api.frame(open.payload.slice, next);
        }
        catch (err) {
            open.viewT = open.payload.t;
            this.contextFrame = null;
            this.toast(`could not load frame ${next}: ${message(err)}`);
        }
        this.renderAll();
    }
    renderAll() {
        const selected = this.model.open
            ? { slice: this.model.open.payload.slice, t: this.model.open.payload.t }
            : null;
        renderQueue(this.elements.queue, this.model.queue, (item) => void this.selectReferral(item), selected);
        renderProgress(this.elements.progress, this.model.progress);
        renderEditor(this.model, this.elements.editor, this.series, this.contextFrame);
        if (this.model.open) {
            if (this.contextFrame) {
                const [m, n] = this.contextFrame.dims;
                paintReadonlyMask(this.elements.editor, decodeRle(this.contextFrame.mask_rle, m * n), this.contextFrame.dims);
            }
            else {
                paintMask(this.model, this.elements.editor);
            }
        }
    }
    toast(text) {
        const note = document.createElement("p");
        note.className = "toast-note";
        note.setAttribute("data-testid", "toast");
        note.textContent = text;
        this.elements.toast.appendChild(note);
        if (this.toastMs > 0) {
            setTimeout(() => note.remove(), this.toastMs);
        }
    }
    showBanner(err) {
        this.elements.bannerMessage.textContent =
            `service unreachable: ${message(err)}`;
        this.elements.banner.hidden = false;
    }
}
function message(err) {
    return err instanceof Error ? err.message : String(err);
}
export function createApp(options = {}) {
    return new App(options);
}
/* Boot when loaded as the page script (the test harness mounts manually). */
if (typeof document !== "undefined" && document.getElementById("app")) {
    const app = createApp({});
    void app.init();
    window.app = app;
}
