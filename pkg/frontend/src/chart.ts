/** Live current-trace chart: point accumulation with a hard cap, SVG path. */

export interface ChartPoint {
  t: number;
  current: number;
}

/** 5 kHz is undrawable raw; the viewport never holds more than this. */
export const CHART_CAP = 2000;

/** Append incoming points, halving resolution whenever the cap is hit. */
export function appendPoints(
  existing: readonly ChartPoint[],
  incoming: readonly ChartPoint[],
  cap: number = CHART_CAP,
): ChartPoint[] {
  let merged = [...existing, ...incoming];
  while (merged.length > cap) {
    merged = merged.filter((_, i) => i % 2 === 0);
  }
  return merged;
}

export function pointsFromPayload(payload: Record<string, unknown>): ChartPoint[] {
  const raw = payload["points"];
  if (!Array.isArray(raw)) return [];
  const points: ChartPoint[] = [];
  for (const entry of raw) {
    if (Array.isArray(entry) && entry.length === 2) {
      const [t, current] = entry;
      if (typeof t === "number" && typeof current === "number") {
        points.push({ t, current });
      }
    }
  }
  return points;
}

/** Polyline SVG for the accumulated trace; empty string when no data yet. */
export function chartSvg(
  points: readonly ChartPoint[],
  width = 560,
  height = 160,
): string {
  if (points.length === 0) return "";
  const ts = points.map((p) => p.t);
  const currents = points.map((p) => p.current);
  const tMin = Math.min(...ts);
  const tMax = Math.max(...ts);
  const iMin = Math.min(...currents);
  const iMax = Math.max(...currents);
  const tSpan = tMax - tMin || 1;
  const iSpan = iMax - iMin || 1;
  const coords = points
    .map((p) => {
      const x = ((p.t - tMin) / tSpan) * (width - 10) + 5;
      const y = height - 5 - ((p.current - iMin) / iSpan) * (height - 10);
      return `${x.toFixed(1)},${y.toFixed(1)}`;
    })
    .join(" ");
  return (
    `<svg class="live-chart" xmlns="http://www.w3.org/2000/svg" ` +
    `width="${width}" height="${height}" viewBox="0 0 ${width} ${height}">` +
    `<polyline points="${coords}" fill="none" stroke="#4c78a8" stroke-width="1"/>` +
    `</svg>`
  );
}
