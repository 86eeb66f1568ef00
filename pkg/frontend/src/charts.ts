// SVG path geometry for the sweep and reliability charts. Only coordinates
// are computed here; the plotted values come straight from service payloads.

import type { ReliabilityBinDoc, SweepPointDoc } from './types.js';

export interface ChartBox {
  width: number;
  height: number;
  pad: number;
}

export const DEFAULT_BOX: ChartBox = { width: 320, height: 160, pad: 12 };

function xScale(value: number, box: ChartBox): number {
  return box.pad + value * (box.width - 2 * box.pad);
}

function yScale(value: number, box: ChartBox): number {
  return box.height - box.pad - value * (box.height - 2 * box.pad);
}

function pathFrom(points: Array<[number, number]>, box: ChartBox): string {
  return points
    .map(([x, y], index) => {
      const cmd = index === 0 ? 'M' : 'L';
      return `${cmd} ${xScale(x, box).toFixed(2)} ${yScale(y, box).toFixed(2)}`;
    })
    .join(' ');
}

/** Accuracy-vs-threshold polyline over the feasible-and-defined sweep points. */
export function sweepAccuracyPath(points: SweepPointDoc[], box: ChartBox = DEFAULT_BOX): string {
  const coords: Array<[number, number]> = [];
  for (const p of points) {
    if (p.accuracy === null) continue;
    coords.push([p.threshold, p.accuracy]);
  }
  return pathFrom(coords, box);
}

/** Rejected-fraction-vs-threshold polyline. */
export function sweepRejectPath(points: SweepPointDoc[], box: ChartBox = DEFAULT_BOX): string {
  return pathFrom(
    points.map((p) => [p.threshold, p.reject_fraction] as [number, number]),
    box,
  );
}

/** Vertical marker for the stored (selected) threshold. */
export function thresholdMarker(
  threshold: number,
  box: ChartBox = DEFAULT_BOX,
): { x: number; y1: number; y2: number } {
  return { x: xScale(threshold, box), y1: yScale(0, box), y2: yScale(1, box) };
}

/** Accuracy-vs-mean-confidence points for non-empty reliability bins. */
export function reliabilityPath(bins: ReliabilityBinDoc[], box: ChartBox = DEFAULT_BOX): string {
  const coords: Array<[number, number]> = [];
  for (const bin of bins) {
    if (bin.mean_confidence === null || bin.accuracy === null) continue;
    coords.push([bin.mean_confidence, bin.accuracy]);
  }
  return pathFrom(coords, box);
}

/** The ideal calibration reference y = x. */
export function diagonalPath(box: ChartBox = DEFAULT_BOX): string {
  return pathFrom(
    [
      [0, 0],
      [1, 1],
    ],
    box,
  );
}

/** True when a polyline is a constant horizontal line (flat sweep). */
export function isFlatPath(path: string): boolean {
  const ys = path
    .split(/[ML]/)
    .map((part) => part.trim())
    .filter((part) => part.length > 0)
    .map((part) => part.split(/\s+/)[1]);
  return ys.length > 1 && new Set(ys).size === 1;
}
