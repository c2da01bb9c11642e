/** Frame editor: layered viewer (image, disagreement heatmap, mask) plus
 * brush controls, accept/submit actions, temporal scrubber, and sparkline.
 *
 * Canvas 2D may be unavailable in headless DOM test environments; every
 * paint call is guarded, while mask state itself lives in ReviewModel and
 * stays fully testable without pixels.
 */
import { formatQ } from "./queue.js";
import { renderSparkline } from "./sparkline.js";
const SCALE = 3;
function button(label, testid) {
    const b = document.createElement("button");
    b.type = "button";
    b.textContent = label;
    b.setAttribute("data-testid", testid);
    return b;
}
export function buildEditor(model, callbacks) {
    const root = document.createElement("section");
    root.id = "editor";
    root.setAttribute("data-testid", "editor");
    root.hidden = true;
    const title = document.createElement("h2");
    title.setAttribute("data-testid", "editor-title");
    const layers = document.createElement("div");
    layers.className = "layers";
    const image = document.createElement("img");
    image.className = "layer layer-image";
    image.alt = "frame";
    const heatmap = document.createElement("img");
    heatmap.className = "layer layer-heatmap";
    heatmap.alt = "disagreement heatmap";
    const maskCanvas = document.createElement("canvas");
    maskCanvas.className = "layer layer-mask";
    const pointerTarget = document.createElement("canvas");
    pointerTarget.className = "layer layer-pointer";
    layers.append(image, heatmap, maskCanvas, pointerTarget);
    const readonlyNote = document.createElement("p");
    readonlyNote.className = "readonly-note";
    readonlyNote.setAttribute("data-testid", "readonly-note");
    readonlyNote.textContent = "context frame — read-only";
    readonlyNote.hidden = true;
    const info = document.createElement("p");
    info.setAttribute("data-testid", "editor-info");
    const dice = document.createElement("p");
    dice.setAttribute("data-testid", "editor-dice");
    const status = document.createElement("p");
    status.setAttribute("data-testid", "editor-status");
    const sparklineSlot = document.createElement("div");
    sparklineSlot.className = "sparkline-slot";
    const scrubBack = button("◀", "scrub-prev");
    const scrubForward = button("▶", "scrub-next");
    const scrubLabel = document.createElement("span");
    scrubLabel.setAttribute("data-testid", "scrub-label");
    scrubBack.addEventListener("click", () => callbacks.onScrub(-1));
    scrubForward.addEventListener("click", () => callbacks.onScrub(+1));
    const scrub = document.createElement("div");
    scrub.className = "scrub";
    scrub.append(scrubBack, scrubLabel, scrubForward);
    const toolBrush = button("brush", "tool-brush");
    const toolEraser = button("eraser", "tool-eraser");
    const brushSize = document.createElement("input");
    brushSize.type = "range";
    brushSize.min = "1";
    brushSize.max = "10";
    brushSize.value = String(model.brushSize);
    brushSize.setAttribute("data-testid", "brush-size");
    toolBrush.addEventListener("click", () => setTool(model, elements, "brush"));
    toolEraser.addEventListener("click", () => setTool(model, elements, "eraser"));
    brushSize.addEventListener("input", () => {
        model.brushSize = Number(brushSize.value);
    });
    const heatmapToggle = document.createElement("input");
    heatmapToggle.type = "checkbox";
    heatmapToggle.checked = true;
    heatmapToggle.setAttribute("data-testid", "heatmap-toggle");
    const opacity = document.createElement("input");
    opacity.type = "range";
    opacity.min = "0";
    opacity.max = "100";
    opacity.value = "45";
    opacity.setAttribute("data-testid", "heatmap-opacity");
    const applyHeatmapStyle = () => {
        heatmap.style.opacity = heatmapToggle.checked
            ? String(Number(opacity.value) / 100)
            : "0";
    };
    heatmapToggle.addEventListener("input", applyHeatmapStyle);
    opacity.addEventListener("input", applyHeatmapStyle);
    const accept = button("Accept", "btn-accept");
    const submit = button("Submit", "btn-submit");
    const reset = button("Reset edits", "btn-reset");
    accept.addEventListener("click", callbacks.onAccept);
    submit.addEventListener("click", callbacks.onSubmit);
    reset.addEventListener("click", callbacks.onReset);
    const toolbar = document.createElement("div");
    toolbar.className = "toolbar";
    const overlayLabel = document.createElement("label");
    overlayLabel.append(heatmapToggle, document.createTextNode(" heatmap"));
    const opacityLabel = document.createElement("label");
    opacityLabel.append(document.createTextNode("opacity "), opacity);
    const brushLabel = document.createElement("label");
    brushLabel.append(document.createTextNode("size "), brushSize);
    toolbar.append(toolBrush, toolEraser, brushLabel, overlayLabel, opacityLabel, accept, submit, reset);
    root.append(title, scrub, readonlyNote, layers, toolbar, info, dice, status, sparklineSlot);
    const elements = {
        root, title, image, heatmap, maskCanvas, pointerTarget, info, dice,
        status, sparklineSlot, scrubLabel, readonlyNote, opacity, heatmapToggle,
        brushSize, toolBrush, toolEraser, accept, submit, reset,
    };
    applyHeatmapStyle();
    setTool(model, elements, model.tool);
    wirePointer(model, elements, () => {
        paintMask(model, elements);
        callbacks.onPainted();
    });
    return elements;
}
function setTool(model, elements, tool) {
    model.tool = tool;
    elements.toolBrush.classList.toggle("active", tool === "brush");
    elements.toolEraser.classList.toggle("active", tool === "eraser");
}
function wirePointer(model, elements, repaint) {
    const canvas = elements.pointerTarget;
    let painting = false;
    const toCell = (event) => {
        if (!model.open)
            return null;
        const [m, n] = model.open.payload.dims;
        const rect = canvas.getBoundingClientRect();
        if (rect.width <= 0 || rect.height <= 0)
            return null;
        const col = ((event.clientX - rect.left) / rect.width) * n;
        const row = ((event.clientY - rect.top) / rect.height) * m;
        return [Math.floor(row), Math.floor(col)];
    };
    const paintAt = (event) => {
        const cell = toCell(event);
        if (!cell)
            return;
        model.paint(cell[0], cell[1]);
        repaint();
    };
    canvas.addEventListener("pointerdown", (event) => {
        painting = true;
        if (canvas.setPointerCapture) {
            try {
                canvas.setPointerCapture(event.pointerId);
            }
            catch {
                /* pointer capture is best-effort (absent in headless DOM) */
            }
        }
        paintAt(event);
    });
    canvas.addEventListener("pointermove", (event) => {
        if (painting)
            paintAt(event);
    });
    const stop = () => {
        painting = false;
    };
    canvas.addEventListener("pointerup", stop);
    canvas.addEventListener("pointercancel", stop);
    canvas.addEventListener("pointerleave", stop);
}
/** Redraw the mask layer from the model buffer (fill plus contour). */
export function paintMask(model, elements) {
    const open = model.open;
    if (!open)
        return;
    const [m, n] = open.payload.dims;
    const canvas = elements.maskCanvas;
    canvas.width = n;
    canvas.height = m;
    const ctx = canvas.getContext && canvas.getContext("2d");
    if (!ctx)
        return;
    ctx.clearRect(0, 0, n, m);
    if (open.viewT !== open.payload.t)
        return; // scrubbed view paints elsewhere
    const img = ctx.createImageData(n, m);
    const data = img.data;
    for (let i = 0; i < open.buffer.length; i++) {
        if (open.buffer[i]) {
            const o = i * 4;
            data[o] = 255;
            data[o + 1] = 96;
            data[o + 2] = 96;
            data[o + 3] = 70;
        }
    }
    for (const i of model.contourIndices()) {
        const o = i * 4;
        data[o] = 255;
        data[o + 1] = 64;
        data[o + 2] = 64;
        data[o + 3] = 255;
    }
    ctx.putImageData(img, 0, 0);
}
/** Draw a read-only mask (served RLE of a context frame). */
export function paintReadonlyMask(elements, bits, dims) {
    const [m, n] = dims;
    const canvas = elements.maskCanvas;
    canvas.width = n;
    canvas.height = m;
    const ctx = canvas.getContext && canvas.getContext("2d");
    if (!ctx)
        return;
    ctx.clearRect(0, 0, n, m);
    const img = ctx.createImageData(n, m);
    for (let i = 0; i < bits.length; i++) {
        if (bits[i]) {
            const o = i * 4;
            img.data[o] = 120;
            img.data[o + 1] = 160;
            img.data[o + 2] = 255;
            img.data[o + 3] = 90;
        }
    }
    ctx.putImageData(img, 0, 0);
}
/** Refresh every editor element for the current model state. The optional
 * contextFrame is the payload shown while scrubbed off the edited frame. */
export function renderEditor(model, elements, series, contextFrame) {
    const open = model.open;
    if (!open) {
        elements.root.hidden = true;
        return;
    }
    elements.root.hidden = false;
    const shown = contextFrame ?? open.payload;
    const editing = open.viewT === open.payload.t;
    const [m, n] = open.payload.dims;
    elements.title.textContent = `${open.payload.slice} · frame ${open.payload.t}`;
    elements.scrubLabel.textContent = `t = ${open.viewT} / ${open.payload.T - 1}`;
    elements.readonlyNote.hidden = editing;
    elements.image.src = `data:image/png;base64,${shown.image_png}`;
    elements.heatmap.src = `data:image/png;base64,${shown.dqc_png}`;
    for (const el of [elements.image, elements.heatmap, elements.maskCanvas,
        elements.pointerTarget]) {
        el.style.width = `${n * SCALE}px`;
        el.style.height = `${m * SCALE}px`;
    }
    elements.pointerTarget.style.pointerEvents = editing ? "auto" : "none";
    const q = formatQ(shown.q_frame);
    elements.info.textContent =
        `q ${q} · area ${shown.area} px · ${shown.component_count} component` +
            (shown.component_count === 1 ? "" : "s");
    if (shown.dice_2d == null) {
        elements.dice.textContent = "dice n/a";
        delete elements.dice.dataset.dice;
    }
    else {
        elements.dice.textContent = `dice ${shown.dice_2d.toFixed(3)}`;
        elements.dice.dataset.dice = String(shown.dice_2d);
    }
    elements.status.textContent = editing
        ? `status: ${open.payload.status}` + (model.dirty() ? " · unsaved edits" : "")
        : "";
    elements.submit.disabled = !editing || !model.dirty();
    elements.accept.disabled = !editing;
    elements.reset.disabled = !editing || !model.dirty();
    elements.sparklineSlot.textContent = "";
    if (series) {
        elements.sparklineSlot.appendChild(renderSparkline(series.q_frame, {
            current: open.viewT,
            referred: series.referred_frames,
        }));
    }
}
