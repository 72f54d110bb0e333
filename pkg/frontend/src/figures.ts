/**
 * Figure builders over run artifacts.
 *
 * Every number printed on a figure (fitted slopes in particular) is read
 * from the artifact's report.json — the single source of truth — never
 * recomputed from the table being drawn.
 */

import {
  MissingTableError, ScanTable, hasTable, readReport, readTable,
} from "./artifact.js";
import { DEFAULT_STYLE, Style, Svg, makeScale, niceTicks } from "./svg.js";

interface FitInfo {
  slope: number;
  intercept: number;
  r2: number;
}

interface ExponentTableSpec {
  /** column indices: x then one or more y series */
  x: number;
  y: number[];
  seriesNames: string[];
  /** path into report.json for the fit annotation of each series */
  fits: (report: any) => Array<FitInfo | undefined>;
  /** reference slope band drawn behind the data, when applicable */
  targetSlope?: number;
  targetHalfWidth?: number;
  title: string;
}

const EXPONENT_TABLES: Record<string, ExponentTableSpec> = {
  "strichartz_scan.csv": {
    x: 0, y: [1, 2],
    seriesNames: ["dispersive", "transport control"],
    fits: (r) => [r.fits?.dispersive, r.fits?.transport],
    targetSlope: 3 / 8, targetHalfWidth: 0.05,
    title: "space-time quotient Q vs frequency",
  },
  "local_smoothing_scan.csv": {
    x: 0, y: [1],
    seriesNames: ["localized ratio"],
    fits: (r) => [r.fits?.local_smoothing],
    targetSlope: -1 / 8, targetHalfWidth: 0.05,
    title: "local smoothing ratio vs band frequency",
  },
  "overlap_single.csv": {
    x: 0, y: [1],
    seriesNames: ["max tube count"],
    fits: (r) => [r.overlap?.single_fit],
    targetSlope: 1 / 4, targetHalfWidth: 0.05,
    title: "single-point tube overlap vs frequency",
  },
  "overlap_two_point.csv": {
    x: 0, y: [1],
    seriesNames: ["two-point count"],
    fits: (r) => [r.overlap?.two_point_fit],
    targetSlope: -1, targetHalfWidth: 0.15,
    title: "two-point tube overlap vs time separation",
  },
  "parametrix_scan.csv": {
    x: 0, y: [5],
    seriesNames: ["packet residual ratio"],
    fits: (r) => [r.fits?.packet_residual],
    title: "packet residual ratio vs frequency",
  },
  "flow_gap.csv": {
    x: 0, y: [1, 2],
    seriesNames: ["transported residual", "bare second derivative"],
    fits: (r) => [r.fits?.G_V, r.fits?.d2x_V],
    title: "flow-integration gap vs truncation frequency",
  },
};

export function exponentTableNames(): string[] {
  return Object.keys(EXPONENT_TABLES);
}

function frame(svg: Svg, style: Style): {
  x0: number; x1: number; y0: number; y1: number;
} {
  const { width, height, margin } = style;
  return {
    x0: margin.left, x1: width - margin.right,
    y0: height - margin.bottom, y1: margin.top,
  };
}

function log2Axes(
  svg: Svg, style: Style, xs: number[], ys: number[],
  xLabel: string, yLabel: string,
) {
  const f = frame(svg, style);
  const lx = xs.map(Math.log2);
  const ly = ys.map(Math.log2);
  const pad = 0.35;
  const xDom: [number, number] =
    [Math.min(...lx) - pad, Math.max(...lx) + pad];
  const yDom: [number, number] =
    [Math.min(...ly) - pad, Math.max(...ly) + pad];
  const sx = makeScale([2 ** xDom[0], 2 ** xDom[1]], [f.x0, f.x1], true);
  const sy = makeScale([2 ** yDom[0], 2 ** yDom[1]], [f.y0, f.y1], true);

  for (const t of niceTicks(xDom[0], xDom[1], 6)) {
    const px = sx(2 ** t);
    svg.line(px, f.y0, px, f.y1, style.gridColor);
    svg.text(px, f.y0 + 18, `2^${trimNum(t)}`, { anchor: "middle" });
  }
  for (const t of niceTicks(yDom[0], yDom[1], 6)) {
    const py = sy(2 ** t);
    svg.line(f.x0, py, f.x1, py, style.gridColor);
    svg.text(f.x0 - 8, py + 4, `2^${trimNum(t)}`, { anchor: "end" });
  }
  svg.line(f.x0, f.y0, f.x1, f.y0, style.axisColor, 1.5);
  svg.line(f.x0, f.y0, f.x0, f.y1, style.axisColor, 1.5);
  svg.text((f.x0 + f.x1) / 2, style.height - 12, xLabel,
    { anchor: "middle" });
  svg.text(18, (f.y0 + f.y1) / 2, yLabel,
    { anchor: "middle", rotate: -90 });
  return { sx, sy, f };
}

function trimNum(v: number): string {
  return Number(v.toFixed(4)).toString();
}

/**
 * Log-log scatter of a scan table with the report's fitted line and the
 * target slope band.  The slope annotations are the report.json values
 * verbatim.
 */
export function plotExponentFit(
  artifactDir: string, table: string, style: Style = DEFAULT_STYLE,
): string {
  const spec = EXPONENT_TABLES[table];
  if (!spec) {
    throw new Error(
      `no exponent-fit layout for table '${table}'; ` +
      `known tables: ${exponentTableNames().join(", ")}`,
    );
  }
  const data: ScanTable = readTable(artifactDir, table);
  const report = readReport(artifactDir);
  const fits = spec.fits(report);

  const rows = data.rows.filter((r) =>
    r[spec.x] > 0 && spec.y.every((c) => r[c] > 0));
  const xs = rows.map((r) => r[spec.x]);
  const ys = rows.flatMap((r) => spec.y.map((c) => r[c]));

  const svg = new Svg(style);
  const { sx, sy, f } = log2Axes(svg, style, xs, ys,
    data.header[spec.x], data.header[spec.y[0]]);

  const xLo = Math.min(...xs);
  const xHi = Math.max(...xs);

  if (spec.targetSlope !== undefined && fits[0]) {
    // band anchored at the first series' fitted line midpoint
    const { slope, intercept } = fits[0];
    const midX = Math.sqrt(xLo * xHi);
    const midY = 2 ** (slope * Math.log2(midX) + intercept);
    const w = spec.targetHalfWidth ?? 0.05;
    const at = (x: number, s: number) =>
      midY * 2 ** (s * (Math.log2(x) - Math.log2(midX)));
    svg.polygon([
      [sx(xLo), sy(at(xLo, spec.targetSlope + w))],
      [sx(xHi), sy(at(xHi, spec.targetSlope + w))],
      [sx(xHi), sy(at(xHi, spec.targetSlope - w))],
      [sx(xLo), sy(at(xLo, spec.targetSlope - w))],
    ], style.bandColor, style.bandOpacity);
  }

  spec.y.forEach((col, i) => {
    const color = style.seriesColors[i % style.seriesColors.length];
    for (const r of rows) {
      svg.circle(sx(r[spec.x]), sy(r[col]), 3.5, color);
    }
    const fit = fits[i];
    if (fit) {
      const yAt = (x: number) =>
        2 ** (fit.slope * Math.log2(x) + fit.intercept);
      svg.polyline(
        [[sx(xLo), sy(yAt(xLo))], [sx(xHi), sy(yAt(xHi))]], color, 1.5);
      svg.text(f.x0 + 10, f.y1 + 18 + 18 * i,
        `${spec.seriesNames[i]}: slope = ${fit.slope}`, { fill: color });
    } else {
      svg.text(f.x0 + 10, f.y1 + 18 + 18 * i,
        `${spec.seriesNames[i]}: no fit in report`, { fill: color });
    }
  });

  svg.text((f.x0 + f.x1) / 2, 20, spec.title,
    { anchor: "middle", size: style.fontSize + 2 });
  return svg.render();
}

/**
 * Characteristic fan: x^t trajectories from ray_fan.csv colored by their
 * frequency, with packet-tube envelopes of the report's tube radius.
 */
export function plotRayFan(
  artifactDir: string, style: Style = DEFAULT_STYLE,
): string {
  const data = readTable(artifactDir, "ray_fan.csv");
  const report = readReport(artifactDir);
  const radius: number = report.ray_fan?.tube_radius ?? 0;

  // group rows (t, x0, xi, x) into one trajectory per (xi, x0)
  const groups = new Map<string, Array<[number, number]>>();
  const xiOf = new Map<string, number>();
  for (const [t, x0, xi, x] of data.rows) {
    const key = `${xi}|${x0}`;
    if (!groups.has(key)) {
      groups.set(key, []);
      xiOf.set(key, xi);
    }
    groups.get(key)!.push([t, x]);
  }
  const xiValues = [...new Set([...xiOf.values()])].sort((a, b) => a - b);

  const ts = data.rows.map((r) => r[0]);
  const xsAll = data.rows.map((r) => r[3]);
  const svg = new Svg(style);
  const f = frame(svg, style);
  const sx = makeScale([Math.min(...ts), Math.max(...ts)], [f.x0, f.x1]);
  const sy = makeScale(
    [Math.min(...xsAll) - 2 * radius, Math.max(...xsAll) + 2 * radius],
    [f.y0, f.y1]);

  for (const t of niceTicks(Math.min(...ts), Math.max(...ts), 6)) {
    svg.text(sx(t), f.y0 + 18, trimNum(t), { anchor: "middle" });
  }
  for (const x of niceTicks(Math.min(...xsAll), Math.max(...xsAll), 6)) {
    svg.text(f.x0 - 8, sy(x) + 4, trimNum(x), { anchor: "end" });
  }
  svg.line(f.x0, f.y0, f.x1, f.y0, style.axisColor, 1.5);
  svg.line(f.x0, f.y0, f.x0, f.y1, style.axisColor, 1.5);
  svg.text((f.x0 + f.x1) / 2, style.height - 12, "t", { anchor: "middle" });
  svg.text(18, (f.y0 + f.y1) / 2, "x^t", { anchor: "middle", rotate: -90 });

  for (const [key, pts] of groups) {
    const xi = xiOf.get(key)!;
    const color = style.seriesColors[
      xiValues.indexOf(xi) % style.seriesColors.length];
    pts.sort((a, b) => a[0] - b[0]);
    if (radius > 0) {
      const upper = pts.map(([t, x]) => [sx(t), sy(x + radius)]);
      const lower = pts.map(([t, x]) => [sx(t), sy(x - radius)]).reverse();
      svg.polygon([...upper, ...lower] as Array<[number, number]>,
        color, style.bandOpacity);
    }
    svg.polyline(pts.map(([t, x]) => [sx(t), sy(x)]), color, 1.2, 0.9);
  }

  xiValues.forEach((xi, i) => {
    svg.text(f.x1 - 8, f.y1 + 16 + 16 * i, `xi = ${trimNum(xi)}`, {
      anchor: "end",
      fill: style.seriesColors[i % style.seriesColors.length],
    });
  });
  svg.text((f.x0 + f.x1) / 2, 20, "characteristic fan with packet tubes",
    { anchor: "middle", size: style.fontSize + 2 });
  return svg.render();
}

/**
 * Residual scalings: identity residuals vs dt (evolution artifacts) or
 * the packet residual vs frequency (parametrix artifacts).
 */
export function plotResiduals(
  artifactDir: string, style: Style = DEFAULT_STYLE,
): string {
  if (hasTable(artifactDir, "identity_residuals.csv")) {
    const data = readTable(artifactDir, "identity_residuals.csv");
    const svg = new Svg(style);
    const xs = data.rows.map((r) => r[0]);
    const cols = data.header.slice(1);
    const ys = data.rows.flatMap((r) => r.slice(1)).filter((v) => v > 0);
    const { sx, sy, f } = log2Axes(svg, style, xs, ys, "dt", "residual");
    cols.forEach((name, i) => {
      const color = style.seriesColors[i % style.seriesColors.length];
      const pts = data.rows
        .filter((r) => r[i + 1] > 0)
        .map((r) => [sx(r[0]), sy(r[i + 1])] as [number, number]);
      svg.polyline(pts, color, 1.5);
      for (const [px, py] of pts) svg.circle(px, py, 3, color);
      svg.text(f.x0 + 10, f.y1 + 16 + 15 * i, name,
        { fill: color, size: style.fontSize - 1 });
    });
    svg.text((f.x0 + f.x1) / 2, 20, "identity residuals vs snapshot dt",
      { anchor: "middle", size: style.fontSize + 2 });
    return svg.render();
  }
  if (hasTable(artifactDir, "parametrix_scan.csv")) {
    return plotExponentFit(artifactDir, "parametrix_scan.csv", style);
  }
  throw new MissingTableError(
    `${artifactDir}/identity_residuals.csv (or parametrix_scan.csv)`);
}
