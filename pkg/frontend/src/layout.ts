// Geometry helpers: node ids to grid coordinates and word-bubble packing.

export interface NodeCoord {
  row: number;
  col: number;
  cage: number;
  slot: number;
  node: number;
}

const NODE_ID = /^c(\d+)-(\d+)c(\d+)s(\d+)n(\d+)$/;

export function parseNodeId(text: string): NodeCoord {
  const m = NODE_ID.exec(text);
  if (!m) throw new Error(`not a node id: ${text}`);
  return {
    col: Number(m[1]),
    row: Number(m[2]),
    cage: Number(m[3]),
    slot: Number(m[4]),
    node: Number(m[5]),
  };
}

export function formatNodeId(c: NodeCoord): string {
  return `c${c.col}-${c.row}c${c.cage}s${c.slot}n${c.node}`;
}

export function cabinetId(c: NodeCoord): string {
  return `c${c.col}-${c.row}`;
}

// Inside one cabinet cell the 96 nodes form a 12x8 micro-grid: cages stack
// vertically (4 node-rows each), slots run horizontally.
export const CABINET_GRID = { rows: 12, cols: 8 };

export function nodeOffset(c: NodeCoord): { x: number; y: number } {
  return { x: c.slot, y: c.cage * 4 + c.node };
}

export interface Bubble {
  term: string;
  count: number;
  x: number;
  y: number;
  r: number;
}

// Greedy row packing: terms arrive ranked, radii scale with sqrt(count) so
// area tracks frequency, the biggest bubble always sits first. Plain and
// deterministic beats force simulation here.
export function bubbleLayout(
  terms: { term: string; count: number }[],
  width: number,
  height: number,
): Bubble[] {
  if (!terms.length) return [];
  const maxCount = Math.max(...terms.map((t) => t.count));
  const rMax = Math.min(width, height) / 6;
  const rMin = Math.max(6, rMax / 6);
  const radius = (count: number) =>
    rMin + (rMax - rMin) * Math.sqrt(count / maxCount);

  const bubbles: Bubble[] = [];
  let x = 0;
  let y = 0;
  let rowHeight = 0;
  for (const { term, count } of terms) {
    const r = radius(count);
    if (x + 2 * r > width && x > 0) {
      x = 0;
      y += rowHeight;
      rowHeight = 0;
    }
    if (y + 2 * r > height) break; // panel full; remaining terms are smaller
    bubbles.push({ term, count, x: x + r, y: y + r, r });
    x += 2 * r + 4;
    rowHeight = Math.max(rowHeight, 2 * r + 4);
  }
  return bubbles;
}
