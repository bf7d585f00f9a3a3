import type { ResultResponse } from "./types.js";

export interface Layout {
  width: number;
  height: number;
  margin: number;
}

export const DEFAULT_LAYOUT: Layout = { width: 900, height: 360, margin: 24 };

export interface Scales {
  x(index: number): number;
  y(value: number): number;
}

export interface Domain {
  lo: number;
  hi: number;
}

export function valueDomain(result: ResultResponse): Domain {
  const candidates = [
    ...result.points.map((p) => p.value),
    ...result.band.lower,
    ...result.band.upper,
  ];
  const lo = Math.min(...candidates);
  const hi = Math.max(...candidates);
  const pad = (hi - lo || 1) * 0.05;
  return { lo: lo - pad, hi: hi + pad };
}

/** Index-to-pixel and value-to-pixel mappings (y grows downward in SVG). */
export function makeScales(n: number, domain: Domain, layout: Layout = DEFAULT_LAYOUT): Scales {
  const innerW = layout.width - 2 * layout.margin;
  const innerH = layout.height - 2 * layout.margin;
  const span = domain.hi - domain.lo || 1;
  return {
    x: (index) => layout.margin + (n <= 1 ? 0 : (index / (n - 1)) * innerW),
    y: (value) => layout.margin + (1 - (value - domain.lo) / span) * innerH,
  };
}

export function linePath(values: number[], scales: Scales): string {
  return values
    .map((v, i) => `${i === 0 ? "M" : "L"}${scales.x(i).toFixed(2)},${scales.y(v).toFixed(2)}`)
    .join(" ");
}

/** Closed polygon between the upper and lower band edges. */
export function bandPath(lower: number[], upper: number[], scales: Scales): string {
  if (lower.length === 0) {
    return "";
  }
  const forward = upper
    .map((v, i) => `${i === 0 ? "M" : "L"}${scales.x(i).toFixed(2)},${scales.y(v).toFixed(2)}`)
    .join(" ");
  const backward = [...lower.keys()]
    .reverse()
    .map((i) => `L${scales.x(i).toFixed(2)},${scales.y(lower[i]).toFixed(2)}`)
    .join(" ");
  return `${forward} ${backward} Z`;
}

export interface Marker {
  index: number;
  x: number;
  y: number;
  disputed: boolean;
}

export function anomalyMarkers(
  result: ResultResponse,
  scales: Scales,
  disputed: ReadonlySet<number>,
): Marker[] {
  const markers: Marker[] = [];
  result.labels.forEach((flag, i) => {
    if (flag) {
      markers.push({
        index: i,
        x: scales.x(i),
        y: scales.y(result.points[i].value),
        disputed: disputed.has(i),
      });
    }
  });
  return markers;
}

/** Band width at one point, in data units. */
export function bandWidthAt(result: ResultResponse, index: number): number {
  return result.band.upper[index] - result.band.lower[index];
}

/** Band height at one point as rendered, in pixels. */
export function bandPixelHeightAt(result: ResultResponse, index: number, scales: Scales): number {
  return scales.y(result.band.lower[index]) - scales.y(result.band.upper[index]);
}
