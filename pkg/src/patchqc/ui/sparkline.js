/** Inline-SVG sparkline of the per-frame quality series.
 *
 * Finite values scale into the plot band; non-finite (empty-frame sentinel)
 * values pin to the top edge and render as hollow markers. The frame under
 * review is highlighted with a filled dot, referred frames with ticks.
 */
const SVG_NS = "http://www.w3.org/2000/svg";
export function renderSparkline(values, options = {}) {
    const width = options.width ?? 260;
    const height = options.height ?? 48;
    const pad = 6;
    const finite = values.filter((v) => Number.isFinite(v));
    const lo = finite.length ? Math.min(...finite) : 0;
    const hi = finite.length ? Math.max(...finite) : 1;
    const span = hi - lo || 1;
    const xAt = (i) => values.length <= 1
        ? width / 2
        : pad + (i * (width - 2 * pad)) / (values.length - 1);
    const yAt = (v) => Number.isFinite(v)
        ? height - pad - ((v - lo) / span) * (height - 2 * pad)
        : pad;
    const svg = document.createElementNS(SVG_NS, "svg");
    svg.setAttribute("viewBox", `0 0 ${width} ${height}`);
    svg.setAttribute("width", String(width));
    svg.setAttribute("height", String(height));
    svg.setAttribute("class", "sparkline");
    const points = values.map((v, i) => `${xAt(i)},${yAt(v)}`).join(" ");
    const line = document.createElementNS(SVG_NS, "polyline");
    line.setAttribute("points", points);
    line.setAttribute("fill", "none");
    line.setAttribute("class", "sparkline-line");
    svg.appendChild(line);
    for (const t of options.referred ?? []) {
        const tick = document.createElementNS(SVG_NS, "line");
        tick.setAttribute("x1", String(xAt(t)));
        tick.setAttribute("x2", String(xAt(t)));
        tick.setAttribute("y1", String(height - pad / 2));
        tick.setAttribute("y2", String(height));
        tick.setAttribute("class", "sparkline-tick");
        svg.appendChild(tick);
    }
    values.forEach((v, i) => {
        if (!Number.isFinite(v)) {
            const dot = document.createElementNS(SVG_NS, "circle");
            dot.setAttribute("cx", String(xAt(i)));
            dot.setAttribute("cy", String(yAt(v)));
            dot.setAttribute("r", "2.5");
            dot.setAttribute("class", "sparkline-sentinel");
            svg.appendChild(dot);
        }
    });
    if (options.current !== undefined && options.current >= 0 &&
        options.current < values.length) {
        const dot = document.createElementNS(SVG_NS, "circle");
        dot.setAttribute("cx", String(xAt(options.current)));
        dot.setAttribute("cy", String(yAt(values[options.current])));
        dot.setAttribute("r", "3.5");
        dot.setAttribute("class", "sparkline-current");
        dot.setAttribute("data-testid", "sparkline-current");
        svg.appendChild(dot);
    }
    return svg;
}
