// HTTP + WebSocket client for the session service.
//
// The WebSocket constructor is injected: browsers pass the global, the
// Node test runner passes the `ws` package's implementation.  Connecting
// always resets the local store because the server replays the full event
// history from seq 0 on every subscribe.

import type { ClientMessage } from "./protocol.js";
import { parseFrame } from "./protocol.js";
import { EventStore } from "./state.js";

export interface WebSocketLike {
  addEventListener(type: string, listener: (ev: { data?: unknown; code?: number }) => void): void;
  send(data: string): void;
  close(code?: number, reason?: string): void;
}

export type WebSocketCtor = new (url: string) => WebSocketLike;

export interface SessionInfo {
  session_id: string;
  seed: number;
}

export interface CreateSessionBody {
  seed?: number;
  config?: Record<string, unknown>;
  record_path?: string;
}

export async function createSession(
  baseUrl: string,
  body: CreateSessionBody = {},
): Promise<SessionInfo> {
  const res = await fetch(`${baseUrl}/sessions`, {
    method: "POST",
    headers: { "content-type": "application/json" },
    body: JSON.stringify(body),
  });
  if (!res.ok) {
    throw new Error(`create session failed: ${res.status} ${await res.text()}`);
  }
  return (await res.json()) as SessionInfo;
}

export async function deleteSession(baseUrl: string, sessionId: string): Promise<void> {
  await fetch(`${baseUrl}/sessions/${sessionId}`, { method: "DELETE" });
}

export function wsUrl(baseUrl: string, sessionId: string): string {
  return `${baseUrl.replace(/^http/, "ws")}/sessions/${sessionId}/ws`;
}

export type ConnectionStatus = "idle" | "connecting" | "open" | "closed";

export class SessionClient {
  readonly store = new EventStore();
  status: ConnectionStatus = "idle";
  lastHeartbeatSim: number | null = null;

  private ws: WebSocketLike | null = null;

  constructor(
    private readonly baseUrl: string,
    readonly sessionId: string,
    private readonly WebSocketImpl: WebSocketCtor,
    private readonly onUpdate: () => void = () => {},
  ) {}

  connect(): Promise<void> {
    this.store.reset();
    this.status = "connecting";
    const ws = new this.WebSocketImpl(wsUrl(this.baseUrl, this.sessionId));
    this.ws = ws;
    return new Promise((resolve, reject) => {
      let settled = false;
      ws.addEventListener("open", () => {
        settled = true;
        this.status = "open";
        this.onUpdate();
        resolve();
      });
      ws.addEventListener("message", (ev) => {
        const frame = parseFrame(String(ev.data));
        if (frame === null) return;
        if (frame.type === "heartbeat") {
          this.lastHeartbeatSim = frame.t_sim;
        } else {
          this.store.ingest(frame.event);
        }
        this.onUpdate();
      });
      ws.addEventListener("close", (ev) => {
        this.status = "closed";
        this.onUpdate();
        if (!settled) {
          settled = true;
          reject(new Error(`websocket closed before open (code ${ev.code ?? "?"})`));
        }
      });
      ws.addEventListener("error", () => {
        this.status = "closed";
        this.onUpdate();
      });
    });
  }

  send(msg: ClientMessage): void {
    if (this.ws === null || this.status !== "open") return;
    this.ws.send(JSON.stringify(msg));
  }

  close(): void {
    this.ws?.close();
    this.ws = null;
    this.status = "closed";
  }
}
