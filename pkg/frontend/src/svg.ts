/** Static SVG rendering of one figure (main panel plus optional inset). */

import path from "node:path";

import { readCurve, type Curve } from "./csv.js";
import { sampleFit } from "./fits.js";
import type { CurveRef, FigureSpec, PanelSpec } from "./manifest.js";

const WIDTH = 640;
const HEIGHT = 440;
const MARGIN = { top: 34, right: 20, bottom: 52, left: 72 };

const PALETTE = ["#c0392b", "#2e6da4", "#27ae60", "#8e44ad", "#d4820b", "#16a085"];

interface Scale {
  (v: number): number;
  kind: "linear" | "log";
}

function makeScale(
  kind: "linear" | "log",
  domain: [number, number],
  range: [number, number],
): Scale {
  let [d0, d1] = domain;
  if (kind === "log") {
    d0 = Math.log10(d0);
    d1 = Math.log10(d1);
  }
  const span = d1 - d0 || 1;
  const fn = ((v: number) => {
    const x = kind === "log" ? Math.log10(v) : v;
    return range[0] + ((x - d0) / span) * (range[1] - range[0]);
  }) as Scale;
  fn.kind = kind;
  return fn;
}

function ticks(kind: "linear" | "log", lo: number, hi: number, count = 6): number[] {
  if (kind === "log") {
    const out: number[] = [];
    for (let e = Math.ceil(Math.log10(lo)); Math.pow(10, e) <= hi * 1.0001; e++) {
      out.push(Math.pow(10, e));
    }
    return out.length >= 2 ? out : [lo, hi];
  }
  const span = hi - lo;
  const step = Math.pow(10, Math.floor(Math.log10(span / count)));
  const err = span / count / step;
  const mult = err >= 7.5 ? 10 : err >= 3.5 ? 5 : err >= 1.5 ? 2 : 1;
  const s = step * mult;
  const out: number[] = [];
  for (let v = Math.ceil(lo / s) * s; v <= hi + s * 1e-9; v += s) out.push(v);
  return out;
}

function fmt(v: number): string {
  if (v === 0) return "0";
  const a = Math.abs(v);
  if (a >= 1e4 || a < 1e-3) return v.toExponential(0).replace("e", "e");
  return Number(v.toPrecision(4)).toString();
}

function esc(s: string): string {
  return s.replace(/&/g, "&amp;").replace(/</g, "&lt;").replace(/>/g, "&gt;").replace(/"/g, "&quot;");
}

function marker(shape: CurveRef["marker"], x: number, y: number, color: string): string {
  switch (shape) {
    case "square":
      return `<rect x="${x - 2.6}" y="${y - 2.6}" width="5.2" height="5.2" fill="${color}"/>`;
    case "triangle":
      return `<path d="M ${x} ${y - 3.2} L ${x - 3} ${y + 2.6} L ${x + 3} ${y + 2.6} Z" fill="${color}"/>`;
    case "none":
      return "";
    default:
      return `<circle cx="${x}" cy="${y}" r="2.6" fill="${color}"/>`;
  }
}

interface Series {
  ref: CurveRef;
  curve: Curve;
  values: number[];
  stderr: number[];
  color: string;
}

function loadSeries(panel: PanelSpec, baseDir: string): Series[] {
  return panel.curves.map((ref, i) => {
    const curve = readCurve(path.resolve(baseDir, ref.csv));
    let values = curve.mean.slice();
    let stderr = curve.stderr.slice();
    if (ref.transform === "one_minus") values = values.map((m) => 1.0 - m);
    else if (ref.transform === "normalized") {
      const scale = Math.abs(curve.mean[0]) || 1;
      values = values.map((m) => m / scale);
      stderr = stderr.map((s) => s / scale);
    }
    return { ref, curve, values, stderr, color: ref.color ?? PALETTE[i % PALETTE.length] };
  });
}

function renderPanel(
  panel: PanelSpec,
  baseDir: string,
  frame: { x: number; y: number; w: number; h: number },
  fontScale = 1,
): string {
  const series = loadSeries(panel, baseDir);
  const xs: number[] = [];
  const ys: number[] = [];
  for (const s of series) {
    xs.push(...s.curve.t);
    ys.push(...s.values);
  }
  for (const fit of panel.fits ?? []) {
    const sampled = sampleFit(fit);
    xs.push(...sampled.t);
    ys.push(...sampled.y);
  }
  const posOnly = (v: number[]) => v.filter((x) => x > 0);
  const xVals = panel.x_scale === "log" ? posOnly(xs) : xs;
  const yVals = panel.y_scale === "log" ? posOnly(ys) : ys;
  if (xVals.length === 0 || yVals.length === 0) {
    // Nothing plottable (e.g. all-zero deficits on a log axis).
    return `<text x="${frame.x + frame.w / 2}" y="${frame.y + frame.h / 2}" text-anchor="middle">no data</text>`;
  }
  let xLo = Math.min(...xVals);
  let xHi = Math.max(...xVals);
  let yLo = Math.min(...yVals);
  let yHi = Math.max(...yVals);
  if (panel.y_scale === "linear") {
    const pad = 0.05 * (yHi - yLo || 1);
    yLo -= pad;
    yHi += pad;
  } else {
    yLo /= 1.5;
    yHi *= 1.5;
  }
  if (xLo === xHi) xHi = xLo + 1;

  const sx = makeScale(panel.x_scale, [xLo, xHi], [frame.x, frame.x + frame.w]);
  const sy = makeScale(panel.y_scale, [yLo, yHi], [frame.y + frame.h, frame.y]);
  const fs = Math.round(12 * fontScale);
  const parts: string[] = [];

  parts.push(
    `<rect x="${frame.x}" y="${frame.y}" width="${frame.w}" height="${frame.h}" fill="white" stroke="#333"/>`,
  );
  for (const tx of ticks(panel.x_scale, xLo, xHi)) {
    const px = sx(tx);
    parts.push(`<line x1="${px}" y1="${frame.y + frame.h}" x2="${px}" y2="${frame.y + frame.h + 4}" stroke="#333"/>`);
    parts.push(
      `<text x="${px}" y="${frame.y + frame.h + 4 + fs}" font-size="${fs}" text-anchor="middle">${fmt(tx)}</text>`,
    );
  }
  for (const ty of ticks(panel.y_scale, yLo, yHi)) {
    const py = sy(ty);
    parts.push(`<line x1="${frame.x - 4}" y1="${py}" x2="${frame.x}" y2="${py}" stroke="#333"/>`);
    parts.push(
      `<text x="${frame.x - 6}" y="${py + fs / 3}" font-size="${fs}" text-anchor="end">${fmt(ty)}</text>`,
    );
  }
  parts.push(
    `<text x="${frame.x + frame.w / 2}" y="${frame.y + frame.h + 4 + 2.4 * fs}" font-size="${fs}" text-anchor="middle">${esc(panel.x_label)}</text>`,
  );
  parts.push(
    `<text x="${frame.x - 52 * fontScale}" y="${frame.y + frame.h / 2}" font-size="${fs}" text-anchor="middle" transform="rotate(-90 ${frame.x - 52 * fontScale} ${frame.y + frame.h / 2})">${esc(panel.y_label)}</text>`,
  );
  if (panel.title) {
    parts.push(
      `<text x="${frame.x + frame.w / 2}" y="${frame.y - 8}" font-size="${fs + 2}" text-anchor="middle">${esc(panel.title)}</text>`,
    );
  }

  const inX = (v: number) => (panel.x_scale === "log" ? v > 0 : true) && v >= xLo && v <= xHi;
  const inY = (v: number) => (panel.y_scale === "log" ? v > 0 : true);

  for (const s of series) {
    const pts: string[] = [];
    const marks: string[] = [];
    for (let i = 0; i < s.curve.t.length; i++) {
      const t = s.curve.t[i];
      const v = s.values[i];
      if (!inX(t) || !inY(v)) continue;
      const px = sx(t);
      const py = sy(v);
      pts.push(`${px.toFixed(2)},${py.toFixed(2)}`);
      if (s.stderr[i] > 0 && panel.y_scale === "linear") {
        const lo = sy(v - s.stderr[i]);
        const hi = sy(v + s.stderr[i]);
        marks.push(`<line x1="${px}" y1="${lo}" x2="${px}" y2="${hi}" stroke="${s.color}" stroke-width="0.8"/>`);
      }
      marks.push(marker(s.ref.marker, px, py, s.color));
    }
    if (pts.length > 1) {
      parts.push(
        `<polyline points="${pts.join(" ")}" fill="none" stroke="${s.color}" stroke-width="1.2" opacity="0.75"/>`,
      );
    }
    parts.push(...marks);
  }

  for (const fit of panel.fits ?? []) {
    const sampled = sampleFit(fit);
    const pts: string[] = [];
    for (let i = 0; i < sampled.t.length; i++) {
      if (!inX(sampled.t[i]) || !inY(sampled.y[i])) continue;
      pts.push(`${sx(sampled.t[i]).toFixed(2)},${sy(sampled.y[i]).toFixed(2)}`);
    }
    if (pts.length > 1) {
      parts.push(
        `<polyline points="${pts.join(" ")}" fill="none" stroke="black" stroke-width="1.4" stroke-dasharray="5,3"/>`,
      );
    }
  }

  // Legend
  let ly = frame.y + 10;
  const lx = frame.x + frame.w - 10;
  for (const s of series) {
    parts.push(
      `<text x="${lx}" y="${ly + fs / 3}" font-size="${fs - 1}" text-anchor="end" fill="${s.color}">${esc(s.ref.label)}</text>`,
    );
    ly += fs + 3;
  }
  for (const fit of panel.fits ?? []) {
    parts.push(
      `<text x="${lx}" y="${ly + fs / 3}" font-size="${fs - 1}" text-anchor="end" fill="black">${esc(fit.label)}</text>`,
    );
    ly += fs + 3;
  }
  return parts.join("\n");
}

export function renderFigure(spec: FigureSpec, manifestPath: string): string {
  const baseDir = path.dirname(path.resolve(manifestPath));
  const frame = {
    x: MARGIN.left,
    y: MARGIN.top,
    w: WIDTH - MARGIN.left - MARGIN.right,
    h: HEIGHT - MARGIN.top - MARGIN.bottom,
  };
  const body = [renderPanel(spec, baseDir, frame)];
  if (spec.inset) {
    const inset = {
      x: frame.x + frame.w * 0.55,
      y: frame.y + frame.h * 0.52,
      w: frame.w * 0.4,
      h: frame.h * 0.4,
    };
    body.push(renderPanel(spec.inset, baseDir, inset, 0.8));
  }
  return [
    `<svg xmlns="http://www.w3.org/2000/svg" width="${WIDTH}" height="${HEIGHT}" viewBox="0 0 ${WIDTH} ${HEIGHT}" font-family="sans-serif">`,
    `<rect width="${WIDTH}" height="${HEIGHT}" fill="white"/>`,
    ...body,
    "</svg>",
  ].join("\n");
}
