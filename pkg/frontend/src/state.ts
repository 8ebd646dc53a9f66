// View state as a pure fold over the server's event stream.
//
// Server authority is structural here: `applyEvent` is the only writer, it
// takes exactly one SessionEvent, and it records every field it touched in
// a change log keyed by that event's seq.  Rebuilding from the raw event
// log must therefore reproduce the live state bit for bit; the e2e test
// asserts exactly that.  The gaze cursor is the one deliberately local
// piece of state and lives outside ViewState.

import type {
  DwellProgressPayload,
  FsmTransitionPayload,
  GazeReadingPayload,
  RobotActionPayload,
  SessionEvent,
  SnapshotPayload,
} from "./protocol.js";

export const LOG_TAIL_LIMIT = 200;

export interface ViewState {
  snapshot: SnapshotPayload | null;
  fsm: string;
  tSim: number;
  busyUntil: number;
  dwell: { objectId: string | null; count: number; threshold: number; inhibited: boolean };
  lastGaze: GazeReadingPayload | null;
  lastTransition: FsmTransitionPayload | null;
  currentAction: RobotActionPayload | null;
  tcp: [number, number, number] | null;
  hand: string;
  heldObjectId: string | null;
  lastError: string | null;
  logTail: string[];
}

export interface Change {
  seq: number;
  field: keyof ViewState;
}

export interface ApplyResult {
  state: ViewState;
  changes: Change[];
}

export function initialState(): ViewState {
  return {
    snapshot: null,
    fsm: "S001",
    tSim: 0,
    busyUntil: 0,
    dwell: { objectId: null, count: 0, threshold: 15, inhibited: false },
    lastGaze: null,
    lastTransition: null,
    currentAction: null,
    tcp: null,
    hand: "open",
    heldObjectId: null,
    lastError: null,
    logTail: [],
  };
}

function describe(event: SessionEvent): string {
  const p = event.payload as Record<string, unknown>;
  switch (event.kind) {
    case "scene_snapshot":
      return `#${event.seq} t=${event.t_sim.toFixed(1)} snapshot fsm=${(p as unknown as SnapshotPayload).fsm_state}`;
    case "gaze_reading": {
      const g = p as unknown as GazeReadingPayload;
      return `#${event.seq} t=${event.t_sim.toFixed(1)} gaze (${g.px.toFixed(0)}, ${g.py.toFixed(0)}) -> ${g.object_id ?? "-"}${g.during_motion ? " [busy]" : ""}`;
    }
    case "dwell_progress": {
      const d = p as unknown as DwellProgressPayload;
      return `#${event.seq} dwell ${d.object_id ?? "-"} ${d.count}/${d.threshold}${d.inhibited ? " (inhibited)" : ""}`;
    }
    case "fsm_transition": {
      const f = p as unknown as FsmTransitionPayload;
      const acts = f.actions.map((a) => a.kind).join("+") || "none";
      return `#${event.seq} fsm ${f.from} -> ${f.to} (${f.reason}) actions: ${acts}`;
    }
    case "robot_action_started":
      return `#${event.seq} ${p.action} started`;
    case "robot_action_finished":
      return `#${event.seq} ${p.action} ${p.ok ? "ok" : `FAILED (${p.reason})`}`;
    case "task_result":
      return `#${event.seq} task_result ${JSON.stringify(p)}`;
    case "error":
      return `#${event.seq} error: ${p.message}`;
  }
}

/** Fold one event into the view; pure, returns new state plus the list of
 * fields it changed, each citing the event's seq. */
export function applyEvent(state: ViewState, event: SessionEvent): ApplyResult {
  const next: ViewState = { ...state };
  const changes: Change[] = [];
  const touch = (field: keyof ViewState) => changes.push({ seq: event.seq, field });

  next.tSim = event.t_sim;
  touch("tSim");
  next.logTail = [...state.logTail, describe(event)].slice(-LOG_TAIL_LIMIT);
  touch("logTail");

  switch (event.kind) {
    case "scene_snapshot": {
      const snap = event.payload as unknown as SnapshotPayload;
      next.snapshot = snap;
      next.fsm = snap.fsm_state;
      next.busyUntil = snap.busy_until_sim;
      next.tcp = snap.robot.tcp;
      next.hand = snap.robot.hand;
      next.heldObjectId = snap.robot.held_object_id;
      next.dwell = { objectId: null, count: 0, threshold: state.dwell.threshold, inhibited: false };
      touch("snapshot");
      touch("fsm");
      touch("busyUntil");
      touch("tcp");
      touch("hand");
      touch("heldObjectId");
      touch("dwell");
      break;
    }
    case "gaze_reading":
      next.lastGaze = event.payload as unknown as GazeReadingPayload;
      touch("lastGaze");
      break;
    case "dwell_progress": {
      const d = event.payload as unknown as DwellProgressPayload;
      next.dwell = {
        objectId: d.object_id,
        count: d.count,
        threshold: d.threshold,
        inhibited: d.inhibited,
      };
      touch("dwell");
      break;
    }
    case "fsm_transition": {
      const f = event.payload as unknown as FsmTransitionPayload;
      next.lastTransition = f;
      next.fsm = f.to;
      touch("lastTransition");
      touch("fsm");
      break;
    }
    case "robot_action_started": {
      const a = event.payload as unknown as RobotActionPayload;
      next.currentAction = a;
      // The arm is acting on the fired intent; the ring restarts from the
      // server's next dwell_progress.
      next.dwell = { ...state.dwell, count: 0, objectId: null };
      touch("currentAction");
      touch("dwell");
      break;
    }
    case "robot_action_finished": {
      const a = event.payload as unknown as RobotActionPayload;
      next.currentAction = null;
      if (a.tcp) next.tcp = a.tcp;
      if (a.hand !== undefined) next.hand = a.hand;
      if (a.held_object_id !== undefined) next.heldObjectId = a.held_object_id;
      if (a.t_end !== undefined) next.busyUntil = Math.max(state.busyUntil, a.t_end);
      touch("currentAction");
      touch("tcp");
      touch("hand");
      touch("heldObjectId");
      touch("busyUntil");
      break;
    }
    case "task_result":
      break;
    case "error":
      next.lastError = String((event.payload as Record<string, unknown>).message ?? "unknown");
      touch("lastError");
      break;
  }
  return { state: next, changes };
}

export function isBusy(state: ViewState): boolean {
  return state.tSim < state.busyUntil;
}

/**
 * Ordered ingestion: events are applied strictly by seq.  Late arrivals
 * wait in a buffer until the gap fills; duplicates and stale seqs are
 * dropped and counted.  A reconnect replays history from seq 0, so the
 * store is reset and refilled through the same path.
 */
export class EventStore {
  state: ViewState = initialState();
  events: SessionEvent[] = [];
  changeLog: Change[] = [];
  dropped = 0;

  private nextSeq = 0;
  private pending = new Map<number, SessionEvent>();

  reset(): void {
    this.state = initialState();
    this.events = [];
    this.changeLog = [];
    this.dropped = 0;
    this.nextSeq = 0;
    this.pending.clear();
  }

  ingest(event: SessionEvent): void {
    if (event.seq < this.nextSeq) {
      this.dropped += 1;
      return;
    }
    this.pending.set(event.seq, event);
    let next = this.pending.get(this.nextSeq);
    while (next !== undefined) {
      this.pending.delete(this.nextSeq);
      this.events.push(next);
      const result = applyEvent(this.state, next);
      this.state = result.state;
      this.changeLog.push(...result.changes);
      this.nextSeq += 1;
      next = this.pending.get(this.nextSeq);
    }
  }

  /** Rebuild from the raw log; must equal the live state (server authority). */
  rebuild(): ViewState {
    let state = initialState();
    for (const event of this.events) {
      state = applyEvent(state, event).state;
    }
    return state;
  }
}
