// Canvas painting for the two operator views: the ego image plane the
// gaze tracker sees, and a top-down workspace map in the robot frame.
// Pure draw calls off ViewState; no state lives here.

import type { BBox, SnapshotPayload } from "./protocol.js";
import type { ViewState } from "./state.js";
import { isBusy } from "./state.js";

export interface Cursor {
  px: number;
  py: number;
}

const OBJECT_COLORS: Record<string, string> = {
  apple: "#d64545",
  orange: "#e8923a",
  cup: "#4a90d9",
  bottle: "#58b368",
  bowl: "#9a6fb8",
  large_container: "#9a6fb8",
  table: "#7a6a58",
};

function colorFor(label: string): string {
  return OBJECT_COLORS[label] ?? "#888888";
}

function labelOf(snap: SnapshotPayload, objectId: string): string {
  const obj = snap.scene.objects.find((o) => o.id === objectId);
  return obj ? obj.label : objectId;
}

/** Image-plane pixels (centre origin, +py up) to canvas coordinates. */
export function egoTransform(
  snap: SnapshotPayload,
  canvasW: number,
  canvasH: number,
): (px: number, py: number) => [number, number] {
  const sx = canvasW / snap.camera.width_px;
  const sy = canvasH / snap.camera.height_px;
  const halfW = snap.camera.width_px / 2;
  const halfH = snap.camera.height_px / 2;
  return (px, py) => [(px + halfW) * sx, (halfH - py) * sy];
}

function drawBox(
  ctx: CanvasRenderingContext2D,
  toCanvas: (px: number, py: number) => [number, number],
  box: { left: number; right: number; bottom: number; top: number },
): void {
  const [x0, y0] = toCanvas(box.left, box.top);
  const [x1, y1] = toCanvas(box.right, box.bottom);
  ctx.strokeRect(x0, y0, x1 - x0, y1 - y0);
}

function drawDwellRing(
  ctx: CanvasRenderingContext2D,
  x: number,
  y: number,
  state: ViewState,
): void {
  const { count, threshold, inhibited } = state.dwell;
  if (count <= 0) return;
  const fraction = Math.min(count / threshold, 1);
  ctx.beginPath();
  ctx.arc(x, y, 16, -Math.PI / 2, -Math.PI / 2 + fraction * 2 * Math.PI);
  ctx.strokeStyle = inhibited ? "#999999" : fraction >= 1 ? "#2fbf4f" : "#f0c040";
  ctx.lineWidth = 3;
  ctx.stroke();
}

export function renderEgo(
  ctx: CanvasRenderingContext2D,
  state: ViewState,
  cursor: Cursor | null,
): void {
  const canvasW = ctx.canvas.width;
  const canvasH = ctx.canvas.height;
  ctx.fillStyle = "#1c1f24";
  ctx.fillRect(0, 0, canvasW, canvasH);
  const snap = state.snapshot;
  if (snap === null) {
    ctx.fillStyle = "#aaaaaa";
    ctx.font = "14px sans-serif";
    ctx.fillText("waiting for scene snapshot", 16, 24);
    return;
  }
  const toCanvas = egoTransform(snap, canvasW, canvasH);

  const surfaces: BBox[] = snap.bboxes.filter((b) => b.is_surface);
  const movables: BBox[] = snap.bboxes.filter((b) => !b.is_surface);

  for (const box of surfaces) {
    ctx.fillStyle = "rgba(122, 106, 88, 0.25)";
    const [x0, y0] = toCanvas(box.left, box.top);
    const [x1, y1] = toCanvas(box.right, box.bottom);
    ctx.fillRect(x0, y0, x1 - x0, y1 - y0);
    ctx.strokeStyle = colorFor(labelOf(snap, box.object_id));
    ctx.lineWidth = 1;
    drawBox(ctx, toCanvas, box);
  }

  // Far boxes first so near objects paint on top.
  for (const box of [...movables].sort((a, b) => b.depth_m - a.depth_m)) {
    const label = labelOf(snap, box.object_id);
    const color = colorFor(label);
    const gazedAt = state.lastGaze?.object_id === box.object_id;
    ctx.strokeStyle = color;
    ctx.lineWidth = gazedAt ? 3 : 1.5;
    drawBox(ctx, toCanvas, box);
    ctx.setLineDash([4, 3]);
    ctx.lineWidth = 1;
    drawBox(ctx, toCanvas, box.trigger);
    ctx.setLineDash([]);
    const [lx, ly] = toCanvas(box.left, box.top);
    ctx.fillStyle = color;
    ctx.font = "11px sans-serif";
    const held = state.heldObjectId === box.object_id ? " (held)" : "";
    ctx.fillText(`${label}${held}`, lx, ly - 3);
  }

  if (cursor !== null) {
    const [cx, cy] = toCanvas(cursor.px, cursor.py);
    ctx.strokeStyle = "#ffffff";
    ctx.lineWidth = 1;
    ctx.beginPath();
    ctx.moveTo(cx - 8, cy);
    ctx.lineTo(cx + 8, cy);
    ctx.moveTo(cx, cy - 8);
    ctx.lineTo(cx, cy + 8);
    ctx.stroke();
    drawDwellRing(ctx, cx, cy, state);
  }

  ctx.fillStyle = isBusy(state) ? "#f0c040" : "#2fbf4f";
  ctx.font = "bold 13px monospace";
  ctx.fillText(state.fsm, 10, 18);
  ctx.fillStyle = "#cccccc";
  ctx.font = "11px monospace";
  ctx.fillText(`t=${state.tSim.toFixed(1)}s${isBusy(state) ? " busy" : ""}`, 10, 32);
}

/** Robot-frame xy to canvas, workspace fitted with a margin; +y points up. */
export function mapTransform(
  snap: SnapshotPayload,
  canvasW: number,
  canvasH: number,
): (x: number, y: number) => [number, number] {
  const [minX, minY] = snap.scene.workspace.min;
  const [maxX, maxY] = snap.scene.workspace.max;
  const margin = 20;
  const scale = Math.min(
    (canvasW - 2 * margin) / (maxX - minX),
    (canvasH - 2 * margin) / (maxY - minY),
  );
  return (x, y) => [margin + (x - minX) * scale, canvasH - margin - (y - minY) * scale];
}

export function renderMap(ctx: CanvasRenderingContext2D, state: ViewState): void {
  const canvasW = ctx.canvas.width;
  const canvasH = ctx.canvas.height;
  ctx.fillStyle = "#14161a";
  ctx.fillRect(0, 0, canvasW, canvasH);
  const snap = state.snapshot;
  if (snap === null) return;
  const toCanvas = mapTransform(snap, canvasW, canvasH);

  const [minX, minY] = snap.scene.workspace.min;
  const [maxX, maxY] = snap.scene.workspace.max;
  ctx.strokeStyle = "#555555";
  ctx.lineWidth = 1;
  const [wx0, wy0] = toCanvas(minX, maxY);
  const [wx1, wy1] = toCanvas(maxX, minY);
  ctx.strokeRect(wx0, wy0, wx1 - wx0, wy1 - wy0);

  const { origin, pitch_m } = snap.scene.grid;
  for (let cell = 0; cell < 9; cell++) {
    const cx = origin[0] + pitch_m * (cell % 3);
    const cy = origin[1] + pitch_m * Math.floor(cell / 3);
    const [x0, y0] = toCanvas(cx - pitch_m / 2, cy + pitch_m / 2);
    const [x1, y1] = toCanvas(cx + pitch_m / 2, cy - pitch_m / 2);
    if (cell === snap.scene.drop_target_cell) {
      ctx.fillStyle = "rgba(47, 191, 79, 0.2)";
      ctx.fillRect(x0, y0, x1 - x0, y1 - y0);
    }
    ctx.strokeStyle = "#333a44";
    ctx.strokeRect(x0, y0, x1 - x0, y1 - y0);
  }

  for (const obj of snap.scene.objects) {
    if (obj.label === "table") continue;
    const held = state.heldObjectId === obj.id;
    // A held object rides the hand; draw it at the TCP instead of its
    // last table position.
    const pos = held && state.tcp ? state.tcp : obj.position;
    const [x, y] = toCanvas(pos[0], pos[1]);
    const r = Math.max(4, obj.extents[0] * 400);
    ctx.fillStyle = colorFor(obj.label);
    ctx.beginPath();
    ctx.arc(x, y, r, 0, 2 * Math.PI);
    ctx.fill();
    ctx.fillStyle = "#dddddd";
    ctx.font = "10px sans-serif";
    ctx.fillText(obj.label, x + r + 2, y + 3);
  }

  if (state.tcp !== null) {
    const [x, y] = toCanvas(state.tcp[0], state.tcp[1]);
    ctx.strokeStyle = state.hand === "closed" ? "#f0c040" : "#ffffff";
    ctx.lineWidth = 2;
    ctx.beginPath();
    ctx.arc(x, y, 7, 0, 2 * Math.PI);
    ctx.stroke();
    ctx.font = "10px monospace";
    ctx.fillStyle = "#aaaaaa";
    ctx.fillText("tcp", x + 10, y - 6);
  }
}
