// Heat coloring. Log scale is the default because event counts on a hot
// node dwarf the background by an order of magnitude; linear is a toggle.

export type ScaleKind = "log" | "linear";

export function intensity(count: number, max: number, kind: ScaleKind = "log"): number {
  if (max <= 0 || count <= 0) return 0;
  const clamped = Math.min(count, max);
  if (kind === "linear") return clamped / max;
  return Math.log1p(clamped) / Math.log1p(max);
}

// white-ish base through amber to deep red
export function heatColor(count: number, max: number, kind: ScaleKind = "log"): string {
  const t = intensity(count, max, kind);
  if (t === 0) return "#e8edf2";
  const r = Math.round(255 - 25 * t);
  const g = Math.round(225 - 190 * t);
  const b = Math.round(190 - 160 * t);
  return `rgb(${r},${g},${b})`;
}

export function legendStops(max: number, kind: ScaleKind = "log", n = 5): { value: number; color: string }[] {
  const stops: { value: number; color: string }[] = [];
  for (let i = 0; i < n; i++) {
    const t = i / (n - 1);
    const value =
      kind === "linear"
        ? Math.round(t * max)
        : Math.round(Math.expm1(t * Math.log1p(max)));
    stops.push({ value, color: heatColor(value, max, kind) });
  }
  return stops;
}
