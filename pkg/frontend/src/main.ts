// Browser entry point: wires the DOM controls to a SessionClient, streams
// the cursor through the GazeDriver, and repaints both views on every
// server event.

import { createSession, SessionClient, type WebSocketCtor } from "./client.js";
import { GazeDriver } from "./gazeDriver.js";
import { gazeSample, resetMessage } from "./protocol.js";
import { renderEgo, renderMap, type Cursor } from "./render.js";

function el<T extends HTMLElement>(id: string): T {
  const node = document.getElementById(id);
  if (node === null) throw new Error(`missing #${id}`);
  return node as T;
}

const egoCanvas = el<HTMLCanvasElement>("ego");
const mapCanvas = el<HTMLCanvasElement>("map");
const egoCtx = egoCanvas.getContext("2d")!;
const mapCtx = mapCanvas.getContext("2d")!;
const statusEl = el<HTMLSpanElement>("status");
const logEl = el<HTMLPreElement>("log");
const baseUrlInput = el<HTMLInputElement>("base-url");
const seedInput = el<HTMLInputElement>("seed");
const graspFailInput = el<HTMLInputElement>("p-grasp-fail");
const pourSlipInput = el<HTMLInputElement>("p-pour-slip");
const graspFailLabel = el<HTMLSpanElement>("p-grasp-fail-value");
const pourSlipLabel = el<HTMLSpanElement>("p-pour-slip-value");

let client: SessionClient | null = null;
let cursor: Cursor | null = null;

// Canvas pixel back to image-plane pixel (centre origin, +py up).
function cursorFromMouse(ev: MouseEvent): Cursor | null {
  const snap = client?.store.state.snapshot;
  if (!snap) return null;
  const rect = egoCanvas.getBoundingClientRect();
  const sx = egoCanvas.width / snap.camera.width_px;
  const sy = egoCanvas.height / snap.camera.height_px;
  const x = ((ev.clientX - rect.left) * egoCanvas.width) / rect.width;
  const y = ((ev.clientY - rect.top) * egoCanvas.height) / rect.height;
  return { px: x / sx - snap.camera.width_px / 2, py: snap.camera.height_px / 2 - y / sy };
}

egoCanvas.addEventListener("mousemove", (ev) => {
  cursor = cursorFromMouse(ev);
});
egoCanvas.addEventListener("mouseleave", () => {
  cursor = null;
});

const driver = new GazeDriver(
  () => cursor,
  () => client?.store.state.snapshot?.bboxes ?? [],
  (sample) => client?.send(gazeSample(sample.px, sample.py, sample.depth_m)),
);

function repaint(): void {
  const state = client?.store.state;
  if (state) {
    renderEgo(egoCtx, state, cursor);
    renderMap(mapCtx, state);
    logEl.textContent = state.logTail.slice(-30).join("\n");
    logEl.scrollTop = logEl.scrollHeight;
  }
  statusEl.textContent = client
    ? `${client.status} (session ${client.sessionId}, ${client.store.events.length} events)`
    : "no session";
}

async function newSession(): Promise<void> {
  driver.stop();
  client?.close();
  const baseUrl = baseUrlInput.value.replace(/\/$/, "");
  const info = await createSession(baseUrl, {
    seed: Number(seedInput.value) || 0,
    config: {
      robot: {
        p_grasp_fail: Number(graspFailInput.value),
        p_slip_during_pour: Number(pourSlipInput.value),
      },
    },
  });
  client = new SessionClient(baseUrl, info.session_id, WebSocket as unknown as WebSocketCtor, repaint);
  await client.connect();
  driver.start();
}

el<HTMLButtonElement>("new-session").addEventListener("click", () => {
  newSession().catch((err) => {
    statusEl.textContent = `error: ${err}`;
  });
});
el<HTMLButtonElement>("reset").addEventListener("click", () => {
  client?.send(resetMessage(null));
});
el<HTMLButtonElement>("randomize").addEventListener("click", () => {
  client?.send(resetMessage(Math.floor(Math.random() * 1_000_000)));
});

for (const [input, label] of [
  [graspFailInput, graspFailLabel],
  [pourSlipInput, pourSlipLabel],
] as const) {
  const sync = () => (label.textContent = Number(input.value).toFixed(2));
  input.addEventListener("input", sync);
  sync();
}

function frame(): void {
  repaint();
  requestAnimationFrame(frame);
}
requestAnimationFrame(frame);
