// Session protocol v1, mirroring the server's message and event schema.
// The server is authoritative; the client only sends raw gaze samples and
// control messages and renders whatever events come back.

export const PROTOCOL_VERSION = 1;

export interface PixelRect {
  left: number;
  right: number;
  bottom: number;
  top: number;
}

export interface BBox {
  object_id: string;
  left: number;
  right: number;
  bottom: number;
  top: number;
  trigger: PixelRect;
  is_surface: boolean;
  depth_m: number;
}

export interface SceneObjectDto {
  id: string;
  label: string;
  gp: string;
  position: [number, number, number];
  extents: [number, number, number];
  grid_cell: number | null;
}

export interface SnapshotPayload {
  scene: {
    objects: SceneObjectDto[];
    grid: { origin: [number, number, number]; pitch_m: number };
    workspace: { min: [number, number, number]; max: [number, number, number] };
    drop_target_cell: number | null;
  };
  bboxes: BBox[];
  fsm_state: string;
  robot: { tcp: [number, number, number]; hand: string; held_object_id: string | null };
  camera: { width_px: number; height_px: number };
  busy_until_sim: number;
}

export interface GazeReadingPayload {
  px: number;
  py: number;
  depth_m: number;
  object_id: string | null;
  point: [number, number, number] | null;
  during_motion: boolean;
}

export interface DwellProgressPayload {
  object_id: string | null;
  count: number;
  threshold: number;
  inhibited: boolean;
}

export interface FsmTransitionPayload {
  from: string;
  to: string;
  reason: string;
  actions: { kind: string; object_id: string | null; target: [number, number, number] | null }[];
}

export interface RobotActionPayload {
  action: string;
  object_id?: string | null;
  target?: [number, number, number] | null;
  t_start?: number;
  ok?: boolean;
  reason?: string;
  duration_s?: number;
  t_end?: number;
  hand?: string;
  held_object_id?: string | null;
  tcp?: [number, number, number];
}

export type EventKind =
  | "scene_snapshot"
  | "gaze_reading"
  | "dwell_progress"
  | "fsm_transition"
  | "robot_action_started"
  | "robot_action_finished"
  | "task_result"
  | "error";

export interface SessionEvent {
  v: number;
  seq: number;
  t_sim: number;
  kind: EventKind;
  payload: Record<string, unknown>;
}

export type ServerFrame =
  | { v: number; type: "event"; event: SessionEvent }
  | { v: number; type: "heartbeat"; t_sim: number };

export interface GazeSampleMessage {
  v: 1;
  type: "gaze_sample";
  payload: { px: number; py: number; depth_m: number | null };
}

export interface ResetMessage {
  v: 1;
  type: "reset";
  payload: { seed: number | null };
}

export type ClientMessage =
  | GazeSampleMessage
  | ResetMessage
  | { v: 1; type: "ping" };

const EVENT_KINDS: ReadonlySet<string> = new Set([
  "scene_snapshot",
  "gaze_reading",
  "dwell_progress",
  "fsm_transition",
  "robot_action_started",
  "robot_action_finished",
  "task_result",
  "error",
]);

/** Parse one wire frame; null for anything that is not schema v1. */
export function parseFrame(raw: string): ServerFrame | null {
  let data: unknown;
  try {
    data = JSON.parse(raw);
  } catch {
    return null;
  }
  if (data === null || typeof data !== "object") return null;
  const frame = data as Record<string, unknown>;
  if (frame.v !== PROTOCOL_VERSION) return null;
  if (frame.type === "heartbeat" && typeof frame.t_sim === "number") {
    return { v: 1, type: "heartbeat", t_sim: frame.t_sim };
  }
  if (frame.type !== "event" || frame.event === null || typeof frame.event !== "object") {
    return null;
  }
  const event = frame.event as Record<string, unknown>;
  if (
    typeof event.seq !== "number" ||
    typeof event.t_sim !== "number" ||
    typeof event.kind !== "string" ||
    !EVENT_KINDS.has(event.kind) ||
    event.payload === null ||
    typeof event.payload !== "object"
  ) {
    return null;
  }
  return { v: 1, type: "event", event: event as unknown as SessionEvent };
}

export function gazeSample(px: number, py: number, depth_m: number | null): GazeSampleMessage {
  return { v: 1, type: "gaze_sample", payload: { px, py, depth_m } };
}

export function resetMessage(seed: number | null): ResetMessage {
  return { v: 1, type: "reset", payload: { seed } };
}
