"""Session service: a thin HTTP + WebSocket skin over `Session`.

The engine stays server-authoritative: clients only send raw gaze samples
and resets, and render whatever events come back.  A subscriber that
connects late receives the full event history from sequence zero before
any live event, so every view of a session is a replay of the same stream.

Per-subscriber queues are bounded; a consumer that cannot keep up is
disconnected rather than allowed to stall the session or grow memory.
"""

from __future__ import annotations

import asyncio
import json
import uuid
from dataclasses import dataclass, field

from fastapi import FastAPI, HTTPException, WebSocket, WebSocketDisconnect

from .config import AppConfig, config_from_dict
from .errors import ConfigError
from .session import Session, SessionLog, canonical_json

HEARTBEAT_INTERVAL_S = 5.0
SUBSCRIBER_QUEUE_LIMIT = 1024


@dataclass(eq=False)
class _Subscriber:
    queue: asyncio.Queue
    dropped: asyncio.Event = field(default_factory=asyncio.Event)


class _SessionHandle:
    def __init__(self, session: Session):
        self.session = session
        self.lock = asyncio.Lock()
        self.subscribers: set[_Subscriber] = set()

    async def process(self, msg: dict) -> list[dict]:
        async with self.lock:
            events = self.session.handle_message(msg)
            for event in events:
                self._broadcast(canonical_json({"v": 1, "type": "event", "event": event}))
        return events

    def _broadcast(self, text: str) -> None:
        for sub in list(self.subscribers):
            try:
                sub.queue.put_nowait(text)
            except asyncio.QueueFull:
                self.subscribers.discard(sub)
                sub.dropped.set()


def create_app(base_config: AppConfig) -> FastAPI:
    app = FastAPI(title="gaze-grammar session service")
    handles: dict[str, _SessionHandle] = {}

    def _handle(session_id: str) -> _SessionHandle:
        handle = handles.get(session_id)
        if handle is None:
            raise HTTPException(status_code=404, detail=f"no session {session_id!r}")
        return handle

    @app.post("/sessions")
    async def create_session(body: dict | None = None) -> dict:
        body = body or {}
        seed = int(body.get("seed", 0))
        try:
            cfg = config_from_dict(body["config"]) if "config" in body else base_config
        except ConfigError as exc:
            raise HTTPException(status_code=422, detail=str(exc)) from exc
        log = SessionLog(body["record_path"]) if "record_path" in body else None
        session_id = uuid.uuid4().hex[:12]
        handles[session_id] = _SessionHandle(Session(cfg, seed=seed, log=log))
        return {"session_id": session_id, "seed": seed}

    @app.delete("/sessions/{session_id}")
    async def close_session(session_id: str) -> dict:
        handle = _handle(session_id)
        async with handle.lock:
            handle.session.close()
            for sub in list(handle.subscribers):
                sub.dropped.set()
            del handles[session_id]
        return {"closed": session_id}

    @app.get("/sessions/{session_id}/scene")
    async def get_scene(session_id: str) -> dict:
        handle = _handle(session_id)
        async with handle.lock:
            for event in reversed(handle.session.events):
                if event["kind"] == "scene_snapshot":
                    return event["payload"]
        raise HTTPException(status_code=500, detail="session has no scene snapshot")

    @app.get("/sessions/{session_id}/events")
    async def get_events(session_id: str, since: int = 0) -> list[dict]:
        handle = _handle(session_id)
        async with handle.lock:
            return [e for e in handle.session.events if e["seq"] >= since]

    @app.websocket("/sessions/{session_id}/ws")
    async def session_ws(ws: WebSocket, session_id: str) -> None:
        handle = handles.get(session_id)
        if handle is None:
            await ws.close(code=4004)
            return
        await ws.accept()

        sub = _Subscriber(asyncio.Queue(maxsize=SUBSCRIBER_QUEUE_LIMIT))
        async with handle.lock:
            history = list(handle.session.events)
            handle.subscribers.add(sub)
        for event in history:
            await ws.send_text(canonical_json({"v": 1, "type": "event", "event": event}))

        sender = asyncio.create_task(_send_loop(ws, handle, sub))
        try:
            while True:
                text = await ws.receive_text()
                try:
                    msg = json.loads(text)
                except json.JSONDecodeError:
                    msg = {"v": 1, "type": "__unparseable__"}
                if msg == {"v": 1, "type": "ping"} or (
                    isinstance(msg, dict) and msg.get("type") == "ping"
                ):
                    await handle.process(msg if isinstance(msg, dict) else {})
                    await ws.send_text(
                        canonical_json(
                            {"v": 1, "type": "heartbeat", "t_sim": handle.session.t_sim}
                        )
                    )
                    continue
                await handle.process(msg if isinstance(msg, dict) else {"v": 0})
        except WebSocketDisconnect:
            pass
        finally:
            handle.subscribers.discard(sub)
            sender.cancel()

    return app


async def _send_loop(ws: WebSocket, handle: _SessionHandle, sub: _Subscriber) -> None:
    try:
        while True:
            if sub.dropped.is_set():
                await ws.close(code=1013)
                return
            try:
                text = await asyncio.wait_for(sub.queue.get(), timeout=HEARTBEAT_INTERVAL_S)
            except asyncio.TimeoutError:
                await ws.send_text(
                    canonical_json(
                        {"v": 1, "type": "heartbeat", "t_sim": handle.session.t_sim}
                    )
                )
                continue
            await ws.send_text(text)
    except asyncio.CancelledError:
        raise
    except Exception:
        sub.dropped.set()


def serve(config: AppConfig, host: str = "127.0.0.1", port: int = 8787) -> None:
    """Run the service until interrupted."""
    import uvicorn

    uvicorn.run(create_app(config), host=host, port=port, log_level="warning")
