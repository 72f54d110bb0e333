/**
 * Minimal deterministic SVG scene builder with linear and log2 axes.
 *
 * Figures embed only numbers handed to them by the caller; nothing is
 * fitted or recomputed here, so the rendered annotations stay byte-equal
 * to the artifact JSON they came from.
 */

export interface Style {
  width: number;
  height: number;
  margin: { top: number; right: number; bottom: number; left: number };
  background: string;
  axisColor: string;
  gridColor: string;
  fontFamily: string;
  fontSize: number;
  seriesColors: string[];
  bandColor: string;
  bandOpacity: number;
}

export const DEFAULT_STYLE: Style = {
  width: 640,
  height: 440,
  margin: { top: 40, right: 30, bottom: 54, left: 70 },
  background: "#ffffff",
  axisColor: "#222222",
  gridColor: "#dddddd",
  fontFamily: "Helvetica, Arial, sans-serif",
  fontSize: 13,
  seriesColors: ["#1f77b4", "#d62728", "#2ca02c", "#9467bd", "#ff7f0e",
    "#8c564b", "#e377c2", "#7f7f7f"],
  bandColor: "#1f77b4",
  bandOpacity: 0.12,
};

export type Scale = (v: number) => number;

function fmt(v: number): string {
  // fixed-precision coordinates keep the output deterministic
  return v.toFixed(3).replace(/\.?0+$/, "") || "0";
}

export function makeScale(
  domain: [number, number], range: [number, number], log2 = false,
): Scale {
  const t = (v: number) => (log2 ? Math.log2(v) : v);
  const [d0, d1] = [t(domain[0]), t(domain[1])];
  const span = d1 - d0 || 1;
  return (v: number) =>
    range[0] + ((t(v) - d0) / span) * (range[1] - range[0]);
}

export function niceTicks(lo: number, hi: number, n = 5): number[] {
  const span = hi - lo || 1;
  const step = Math.pow(10, Math.floor(Math.log10(span / n)));
  const err = span / (n * step);
  const mult = err >= 7.5 ? 10 : err >= 3.5 ? 5 : err >= 1.5 ? 2 : 1;
  const s = step * mult;
  const ticks: number[] = [];
  for (let v = Math.ceil(lo / s) * s; v <= hi + 1e-12; v += s) {
    ticks.push(Math.abs(v) < 1e-12 ? 0 : v);
  }
  return ticks;
}

export class Svg {
  private parts: string[] = [];

  constructor(public readonly style: Style = DEFAULT_STYLE) {}

  rect(x: number, y: number, w: number, h: number, fill: string,
    opacity = 1): void {
    this.parts.push(
      `<rect x="${fmt(x)}" y="${fmt(y)}" width="${fmt(w)}" ` +
      `height="${fmt(h)}" fill="${fill}" opacity="${opacity}"/>`,
    );
  }

  line(x1: number, y1: number, x2: number, y2: number, stroke: string,
    width = 1, dash?: string): void {
    const d = dash ? ` stroke-dasharray="${dash}"` : "";
    this.parts.push(
      `<line x1="${fmt(x1)}" y1="${fmt(y1)}" x2="${fmt(x2)}" ` +
      `y2="${fmt(y2)}" stroke="${stroke}" stroke-width="${width}"${d}/>`,
    );
  }

  polyline(points: Array<[number, number]>, stroke: string, width = 1.5,
    opacity = 1): void {
    const pts = points.map(([x, y]) => `${fmt(x)},${fmt(y)}`).join(" ");
    this.parts.push(
      `<polyline points="${pts}" fill="none" stroke="${stroke}" ` +
      `stroke-width="${width}" opacity="${opacity}"/>`,
    );
  }

  polygon(points: Array<[number, number]>, fill: string,
    opacity: number): void {
    const pts = points.map(([x, y]) => `${fmt(x)},${fmt(y)}`).join(" ");
    this.parts.push(
      `<polygon points="${pts}" fill="${fill}" opacity="${opacity}"/>`,
    );
  }

  circle(x: number, y: number, r: number, fill: string): void {
    this.parts.push(
      `<circle cx="${fmt(x)}" cy="${fmt(y)}" r="${r}" fill="${fill}"/>`,
    );
  }

  text(x: number, y: number, content: string, opts: {
    anchor?: string; size?: number; fill?: string; rotate?: number;
  } = {}): void {
    const size = opts.size ?? this.style.fontSize;
    const anchor = opts.anchor ?? "start";
    const fill = opts.fill ?? this.style.axisColor;
    const rot = opts.rotate
      ? ` transform="rotate(${opts.rotate} ${fmt(x)} ${fmt(y)})"` : "";
    this.parts.push(
      `<text x="${fmt(x)}" y="${fmt(y)}" text-anchor="${anchor}" ` +
      `font-family="${this.style.fontFamily}" font-size="${size}" ` +
      `fill="${fill}"${rot}>${escapeXml(content)}</text>`,
    );
  }

  render(): string {
    const { width, height, background } = this.style;
    return `<svg xmlns="http://www.w3.org/2000/svg" width="${width}" ` +
      `height="${height}" viewBox="0 0 ${width} ${height}">\n` +
      `<rect width="${width}" height="${height}" fill="${background}"/>\n` +
      this.parts.join("\n") + "\n</svg>\n";
  }
}

function escapeXml(s: string): string {
  return s.replace(/&/g, "&amp;").replace(/</g, "&lt;").replace(/>/g, "&gt;");
}
