/** SVG scatter plot with concept boundary lines for 2-D datasets.
 *
 * Boundary coefficients come from the server; this module only rasterizes
 * w0*x + w1*y + b = 0 into line segments clipped to the data's bounding box.
 */

const SVG_NS = "http://www.w3.org/2000/svg";

export interface Box {
  xmin: number;
  xmax: number;
  ymin: number;
  ymax: number;
}

export function dataBox(points: number[][], pad = 0.08): Box {
  let xmin = Infinity,
    xmax = -Infinity,
    ymin = Infinity,
    ymax = -Infinity;
  for (const [x, y] of points) {
    xmin = Math.min(xmin, x);
    xmax = Math.max(xmax, x);
    ymin = Math.min(ymin, y);
    ymax = Math.max(ymax, y);
  }
  const dx = (xmax - xmin || 1) * pad;
  const dy = (ymax - ymin || 1) * pad;
  return { xmin: xmin - dx, xmax: xmax + dx, ymin: ymin - dy, ymax: ymax + dy };
}

/** Intersection of the line w0*x + w1*y + b = 0 with the box edges.
 * Returns null for degenerate coefficients or a line outside the box. */
export function clipLine(
  coeff: [number, number, number],
  box: Box,
): [[number, number], [number, number]] | null {
  const [w0, w1, b] = coeff;
  if (Math.abs(w0) < 1e-12 && Math.abs(w1) < 1e-12) return null;
  const pts: [number, number][] = [];
  const push = (x: number, y: number) => {
    if (
      x >= box.xmin - 1e-9 &&
      x <= box.xmax + 1e-9 &&
      y >= box.ymin - 1e-9 &&
      y <= box.ymax + 1e-9
    ) {
      if (!pts.some(([px, py]) => Math.abs(px - x) < 1e-9 && Math.abs(py - y) < 1e-9)) {
        pts.push([x, y]);
      }
    }
  };
  if (Math.abs(w1) > 1e-12) {
    push(box.xmin, -(b + w0 * box.xmin) / w1);
    push(box.xmax, -(b + w0 * box.xmax) / w1);
  }
  if (Math.abs(w0) > 1e-12) {
    push(-(b + w1 * box.ymin) / w0, box.ymin);
    push(-(b + w1 * box.ymax) / w0, box.ymax);
  }
  if (pts.length < 2) return null;
  return [pts[0], pts[1]];
}

const LINE_COLORS = ["#d62728", "#2ca02c", "#9467bd", "#ff7f0e", "#8c564b", "#17becf"];

export interface ScatterOptions {
  width?: number;
  height?: number;
  pointRadius?: number;
  maxPoints?: number;
}

export function renderScatter(
  doc: Document,
  points: number[][],
  labels: number[],
  boundaries: number[][] | null,
  opts: ScatterOptions = {},
): SVGSVGElement {
  const width = opts.width ?? 260;
  const height = opts.height ?? 260;
  const r = opts.pointRadius ?? 2;
  const step = opts.maxPoints ? Math.max(1, Math.floor(points.length / opts.maxPoints)) : 1;
  const box = dataBox(points);
  const sx = (x: number) => ((x - box.xmin) / (box.xmax - box.xmin)) * width;
  const sy = (y: number) => height - ((y - box.ymin) / (box.ymax - box.ymin)) * height;

  const svg = doc.createElementNS(SVG_NS, "svg") as SVGSVGElement;
  svg.setAttribute("viewBox", `0 0 ${width} ${height}`);
  svg.setAttribute("class", "scatter");

  for (let i = 0; i < points.length; i += step) {
    const c = doc.createElementNS(SVG_NS, "circle");
    c.setAttribute("cx", sx(points[i][0]).toFixed(2));
    c.setAttribute("cy", sy(points[i][1]).toFixed(2));
    c.setAttribute("r", String(r));
    c.setAttribute("class", labels[i] === 1 ? "pt pos" : "pt neg");
    svg.appendChild(c);
  }

  (boundaries ?? []).forEach((coeff, k) => {
    const seg = clipLine(coeff as [number, number, number], box);
    if (!seg) return;
    const line = doc.createElementNS(SVG_NS, "line");
    line.setAttribute("x1", sx(seg[0][0]).toFixed(2));
    line.setAttribute("y1", sy(seg[0][1]).toFixed(2));
    line.setAttribute("x2", sx(seg[1][0]).toFixed(2));
    line.setAttribute("y2", sy(seg[1][1]).toFixed(2));
    line.setAttribute("class", "boundary");
    line.setAttribute("stroke", LINE_COLORS[k % LINE_COLORS.length]);
    line.setAttribute("data-concept", String(k));
    svg.appendChild(line);
  });
  return svg;
}

/** Horizontal bar profile of one concept's input weights (non-2-D datasets). */
export function renderWeightBars(
  doc: Document,
  weights: number[],
  featureNames: string[],
): HTMLElement {
  const wrap = doc.createElement("div");
  wrap.className = "weight-bars";
  const maxAbs = Math.max(...weights.map(Math.abs), 1e-9);
  weights.forEach((w, i) => {
    const row = doc.createElement("div");
    row.className = "weight-row";
    const name = doc.createElement("span");
    name.className = "weight-name";
    name.textContent = featureNames[i] ?? `x${i}`;
    const bar = doc.createElement("span");
    bar.className = "weight-bar " + (w >= 0 ? "pos" : "neg");
    bar.style.width = `${(Math.abs(w) / maxAbs) * 100}%`;
    bar.title = w.toFixed(3);
    row.append(name, bar);
    wrap.appendChild(row);
  });
  return wrap;
}
