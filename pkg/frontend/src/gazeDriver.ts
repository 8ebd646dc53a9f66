// Turns the operator's cursor into the 10 Hz gaze sample stream.
//
// The tracker depth channel is emulated from the last snapshot: over a
// movable object we report that object's bbox plane depth, over the table
// or empty background we report null and let the server fill in its own
// ground-truth raycast.  The server never trusts the client for anything
// beyond this raw sample.

import type { BBox } from "./protocol.js";

export const SAMPLE_PERIOD_MS = 100;

function contains(box: BBox, px: number, py: number): boolean {
  return px >= box.left && px <= box.right && py >= box.bottom && py <= box.top;
}

/** Depth to report for a cursor position: nearest movable bbox plane, else null. */
export function depthUnderCursor(bboxes: readonly BBox[], px: number, py: number): number | null {
  let best: number | null = null;
  for (const box of bboxes) {
    if (box.is_surface) continue;
    if (!contains(box, px, py)) continue;
    if (best === null || box.depth_m < best) best = box.depth_m;
  }
  return best;
}

export interface GazeSampleOut {
  px: number;
  py: number;
  depth_m: number | null;
}

/**
 * Fixed-rate sampler.  `cursor` is polled each tick; `bboxes` supplies the
 * current snapshot's boxes for the depth emulation.  Timer functions are
 * injectable so tests can drive ticks manually.
 */
export class GazeDriver {
  private timer: ReturnType<typeof setInterval> | null = null;

  constructor(
    private readonly cursor: () => { px: number; py: number } | null,
    private readonly bboxes: () => readonly BBox[],
    private readonly emit: (sample: GazeSampleOut) => void,
    private readonly periodMs: number = SAMPLE_PERIOD_MS,
  ) {}

  tick(): void {
    const pos = this.cursor();
    if (pos === null) return;
    this.emit({
      px: pos.px,
      py: pos.py,
      depth_m: depthUnderCursor(this.bboxes(), pos.px, pos.py),
    });
  }

  start(): void {
    if (this.timer !== null) return;
    this.timer = setInterval(() => this.tick(), this.periodMs);
  }

  stop(): void {
    if (this.timer === null) return;
    clearInterval(this.timer);
    this.timer = null;
  }
}
