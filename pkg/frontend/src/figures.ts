/** Figure builders: each kind maps validated tables onto one canvas. */

import { Canvas, Color, hex } from "./canvas";
import { Table } from "./csv";

export interface Style {
  width: number;
  height: number;
  margin: number;
  background: string;
  axis: string;
  series: string[];
  shade_pass: string;
  shade_invalid: string;
  marker_size: number;
  line_width: number;
}

export const DEFAULT_STYLE: Style = {
  width: 720,
  height: 480,
  margin: 60,
  background: "#ffffff",
  axis: "#202020",
  series: ["#1f5fbf", "#bf3f1f", "#1f9f4f", "#7f3fbf", "#bf8f1f"],
  shade_pass: "#1f9f4f30",
  shade_invalid: "#9f9f9f60",
  marker_size: 3,
  line_width: 2,
};

interface Frame {
  x0: number;
  y0: number;
  w: number;
  h: number;
  xmin: number;
  xmax: number;
  ymin: number;
  ymax: number;
  logx: boolean;
  logy: boolean;
}

function mapX(f: Frame, x: number): number {
  const t = f.logx
    ? (Math.log10(x) - Math.log10(f.xmin)) / (Math.log10(f.xmax) - Math.log10(f.xmin))
    : (x - f.xmin) / (f.xmax - f.xmin);
  return f.x0 + t * f.w;
}

function mapY(f: Frame, y: number): number {
  const t = f.logy
    ? (Math.log10(y) - Math.log10(f.ymin)) / (Math.log10(f.ymax) - Math.log10(f.ymin))
    : (y - f.ymin) / (f.ymax - f.ymin);
  return f.y0 + f.h - t * f.h;
}

function fmtTick(v: number): string {
  if (v !== 0 && (Math.abs(v) < 1e-3 || Math.abs(v) >= 1e4)) {
    return v.toExponential(1).replace("E", "e");
  }
  return Number(v.toPrecision(3)).toString();
}

function drawFrame(cv: Canvas, f: Frame, style: Style, xlabel: string, ylabel: string): void {
  const axis = hex(style.axis);
  cv.line(f.x0, f.y0 + f.h, f.x0 + f.w, f.y0 + f.h, axis, 1);
  cv.line(f.x0, f.y0, f.x0, f.y0 + f.h, axis, 1);
  const nticks = 5;
  for (let i = 0; i <= nticks; i++) {
    const t = i / nticks;
    const xv = f.logx
      ? Math.pow(10, Math.log10(f.xmin) + t * (Math.log10(f.xmax) - Math.log10(f.xmin)))
      : f.xmin + t * (f.xmax - f.xmin);
    const yv = f.logy
      ? Math.pow(10, Math.log10(f.ymin) + t * (Math.log10(f.ymax) - Math.log10(f.ymin)))
      : f.ymin + t * (f.ymax - f.ymin);
    const px = mapX(f, xv);
    const py = mapY(f, yv);
    cv.line(px, f.y0 + f.h, px, f.y0 + f.h + 4, axis, 1);
    cv.text(px - 12, f.y0 + f.h + 8, fmtTick(xv), axis);
    cv.line(f.x0 - 4, py, f.x0, py, axis, 1);
    cv.text(4, py - 3, fmtTick(yv), axis);
  }
  cv.text(f.x0 + f.w / 2 - 3 * xlabel.length, f.y0 + f.h + 24, xlabel, axis);
  cv.text(f.x0, f.y0 - 16, ylabel, axis);
}

function finitePositive(vals: number[]): number[] {
  return vals.filter((v) => isFinite(v) && v > 0);
}

function bounds(vals: number[], pad = 0.08): [number, number] {
  const lo = Math.min(...vals);
  const hi = Math.max(...vals);
  const span = hi - lo || Math.abs(hi) || 1;
  return [lo - pad * span, hi + pad * span];
}

function logBounds(vals: number[]): [number, number] {
  const lo = Math.min(...vals);
  const hi = Math.max(...vals);
  return [lo / 1.5, hi * 1.5];
}

/** Least-squares slope of log(y) against log(x). */
export function loglogSlope(xs: number[], ys: number[]): number {
  const pts = xs
    .map((x, i) => [x, ys[i]])
    .filter(([x, y]) => isFinite(x) && isFinite(y) && x > 0 && y > 0)
    .map(([x, y]) => [Math.log(x), Math.log(y)]);
  const n = pts.length;
  const mx = pts.reduce((s, p) => s + p[0], 0) / n;
  const my = pts.reduce((s, p) => s + p[1], 0) / n;
  const sxy = pts.reduce((s, p) => s + (p[0] - mx) * (p[1] - my), 0);
  const sxx = pts.reduce((s, p) => s + (p[0] - mx) * (p[0] - mx), 0);
  return sxy / sxx;
}

export function renderRatioSweep(tables: Table[], style: Style): Canvas {
  const cv = new Canvas(style.width, style.height, hex(style.background));
  const t = tables[0];
  const scale = t.col("scale");
  const ratio = t.col("ratio");
  const resonant = t.col("resonant").map(Math.abs);
  const off = t.col("off_resonant").map(Math.abs);

  const allY = finitePositive([...ratio, ...resonant, ...off]);
  const [ymin, ymax] = logBounds(allY);
  const [xminRaw, xmaxRaw] = [Math.min(...scale), Math.max(...scale)];
  const f: Frame = {
    x0: style.margin,
    y0: style.margin,
    w: style.width - 2 * style.margin,
    h: style.height - 2 * style.margin,
    xmin: xminRaw / 1.2,
    xmax: xmaxRaw * 1.2,
    ymin,
    ymax,
    logx: true,
    logy: true,
  };
  drawFrame(cv, f, style, "scale", "ratio");

  const seriesCols = style.series.map(hex);
  const plots: Array<[string, number[]]> = [
    ["ratio", ratio],
    ["resonant", resonant],
    ["offres", off],
  ];
  plots.forEach(([label, ys], idx) => {
    const col = seriesCols[idx % seriesCols.length];
    const px = scale.map((x) => mapX(f, x));
    const py = ys.map((y) => (y > 0 && isFinite(y) ? mapY(f, y) : NaN));
    cv.polyline(px, py, col, style.line_width);
    for (let i = 0; i < px.length; i++) {
      // upward triangles mark monotone-increasing steps of the main curve
      const mono = label === "ratio" && i > 0 && ys[i] > ys[i - 1];
      cv.marker(px[i], py[i], col, mono ? "triangle" : "circle", style.marker_size);
    }
    cv.text(f.x0 + f.w - 70, f.y0 + 12 * (idx + 1), label, col);
  });

  const slope = loglogSlope(scale, ratio);
  cv.text(f.x0 + 8, f.y0 + 8, `slope = ${slope.toFixed(3)}`, hex(style.axis));
  return cv;
}

export function renderEnergyTrajectory(tables: Table[], style: Style): Canvas {
  const cv = new Canvas(style.width, style.height, hex(style.background));
  const times = tables[0].col("t");
  const allPos: number[] = [];
  for (const t of tables) {
    allPos.push(...finitePositive(t.col("F_N")));
    allPos.push(...finitePositive(t.col("bound")));
  }
  const [ymin, ymax] = logBounds(allPos);
  const f: Frame = {
    x0: style.margin,
    y0: style.margin,
    w: style.width - 2 * style.margin,
    h: style.height - 2 * style.margin,
    xmin: Math.min(...times),
    xmax: Math.max(...times),
    ymin,
    ymax,
    logx: false,
    logy: true,
  };

  // verdict shading from the first table: green where the bound audit holds,
  // gray beyond a truncated (NaN) bound
  const t0 = tables[0];
  const bound0 = t0.col("bound");
  const verdict = t0.col("verdict_flag");
  const ts = t0.col("t");
  for (let i = 1; i < ts.length; i++) {
    const x0 = mapX(f, ts[i - 1]);
    const x1 = mapX(f, ts[i]);
    if (!isFinite(bound0[i])) {
      cv.fillRect(x0, f.y0, x1 - x0, f.h, hex(style.shade_invalid));
    } else if (verdict[i] > 0) {
      cv.fillRect(x0, f.y0, x1 - x0, f.h, hex(style.shade_pass));
    }
  }
  drawFrame(cv, f, style, "t", "F_N / bound");

  const seriesCols = style.series.map(hex);
  tables.forEach((table, k) => {
    const col = seriesCols[k % seriesCols.length];
    const tt = table.col("t");
    const fx = tt.map((x) => mapX(f, x));
    const fy = table.col("F_N").map((y) => (y > 0 ? mapY(f, y) : NaN));
    const by = table.col("bound").map((y) => (isFinite(y) && y > 0 ? mapY(f, y) : NaN));
    cv.polyline(fx, fy, col, style.line_width);
    for (let i = 0; i < fx.length; i++) cv.marker(fx[i], fy[i], col, "circle", style.marker_size);
    const dashed: Color = [col[0], col[1], col[2], 150];
    cv.polyline(fx, by, dashed, 1);
    cv.text(f.x0 + f.w - 70, f.y0 + 12 * (k + 1), `run ${k}`, col);
  });
  return cv;
}

export function renderRateLoglog(tables: Table[], style: Style): Canvas {
  const cv = new Canvas(style.width, style.height, hex(style.background));
  const t = tables[0];
  const eps = t.col("epsilon");
  const err = t.col("sup_error");
  const pos = finitePositive(err);
  const [ymin, ymax] = logBounds(pos.length ? pos : [1e-16, 1]);
  const f: Frame = {
    x0: style.margin,
    y0: style.margin,
    w: style.width - 2 * style.margin,
    h: style.height - 2 * style.margin,
    xmin: Math.min(...eps) / 1.2,
    xmax: Math.max(...eps) * 1.2,
    ymin,
    ymax,
    logx: true,
    logy: true,
  };
  drawFrame(cv, f, style, "epsilon", "sup error");
  const col = hex(style.series[0]);
  const px = eps.map((x) => mapX(f, x));
  const py = err.map((y) => (y > 0 ? mapY(f, y) : NaN));
  cv.polyline(px, py, col, style.line_width);
  px.forEach((x, i) => cv.marker(x, py[i], col, "circle", style.marker_size));
  cv.text(f.x0 + 8, f.y0 + 8, `order = ${loglogSlope(eps, err).toFixed(3)}`, hex(style.axis));
  return cv;
}

export function renderSymbolCheck(tables: Table[], style: Style): Canvas {
  const cv = new Canvas(style.width, style.height, hex(style.background));
  const t = tables[0];
  const rho = t.col("rho");
  const sym = t.col("symbol");
  const pos = finitePositive(sym);
  const [ymin, ymax] = logBounds(pos.length ? pos : [1e-16, 1]);
  const f: Frame = {
    x0: style.margin,
    y0: style.margin,
    w: style.width - 2 * style.margin,
    h: style.height - 2 * style.margin,
    xmin: Math.min(...rho.filter((v) => v > 0)),
    xmax: Math.max(...rho) * 1.2,
    ymin,
    ymax,
    logx: true,
    logy: true,
  };
  drawFrame(cv, f, style, "rho", "symbol");
  const col = hex(style.series[0]);
  cv.polyline(
    rho.map((x) => (x > 0 ? mapX(f, x) : NaN)),
    sym.map((y) => (y > 0 ? mapY(f, y) : NaN)),
    col,
    style.line_width,
  );
  return cv;
}

export const RENDERERS: Record<string, (tables: Table[], style: Style) => Canvas> = {
  ratio_sweep: renderRatioSweep,
  energy_trajectory: renderEnergyTrajectory,
  rate_loglog: renderRateLoglog,
  symbol_check: renderSymbolCheck,
};
