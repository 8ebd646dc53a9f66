"""Transport-free session engine.

A `Session` owns one episode of the pipeline: scene, dwell decoder, action
grammar, simulated arm, and a monotonically growing event history.  The
WebSocket layer and the evaluation harness both drive the same engine, so
an interactive run and a batch run with the same inputs and seed produce
byte-identical event streams.

Time is simulated and server-authoritative: every gaze sample advances the
clock by one sample period, robot actions schedule their durations ahead of
it.  While the arm is in motion the dwell counter is frozen (not reset), so
a user already fixating a target neither loses their progress nor
re-triggers on stale inhibition.

Events are dicts `{v, seq, t_sim, kind, payload}`; `canonical_json` is the
single serialization used for logs, replay comparison, and the wire.
"""

from __future__ import annotations

import json
import random
from dataclasses import dataclass
from pathlib import Path
from typing import IO

from . import fsm as fsm_mod
from . import robot as robot_mod
from .config import AppConfig
from .errors import GazeGrammarError, ProtocolError
from .fsm import ActionKind, FsmState, RobotAction, TransitionInput
from .geometry import (
    CameraModel,
    GazePixel,
    Point3,
    RigidTransform,
    apply,
    compose,
    gaze_to_robot_frame,
    invert,
    project_point,
)
from .glove import GraspAssessment, assess, simulate_telemetry
from .intent import DWELL_SAMPLES, DwellState, Intent, classify_gaze, update_dwell
from .robot import RobotState
from .scene import EgoBBox, Scene, in_workspace, project_bboxes, randomize_grid_placement, raycast_depth, scene_to_dict

DROP_CLEARANCE_M = 0.10
POUR_CLEARANCE_M = 0.15

EVENT_KINDS = (
    "scene_snapshot",
    "gaze_reading",
    "dwell_progress",
    "fsm_transition",
    "robot_action_started",
    "robot_action_finished",
    "task_result",
    "error",
)


def canonical_json(obj: object) -> str:
    """The one serialization used everywhere bytes are compared."""
    return json.dumps(obj, sort_keys=True, separators=(",", ":"), allow_nan=False)


class SessionLog:
    """Append-only ndjson recorder: a header line, then every inbound
    message and outbound event in arrival order."""

    def __init__(self, path: str | Path):
        self._fh: IO[str] = open(path, "w")

    def header(self, config_doc: dict, seed: int) -> None:
        self._write({"type": "session_open", "v": 1, "seed": seed, "config": config_doc})

    def record_in(self, msg: dict) -> None:
        self._write({"type": "in", "msg": msg})

    def record_out(self, event: dict) -> None:
        self._write({"type": "out", "event": event})

    def _write(self, obj: dict) -> None:
        self._fh.write(canonical_json(obj) + "\n")
        self._fh.flush()

    def close(self) -> None:
        self._fh.close()


def _point_list(p: Point3 | None) -> list[float] | None:
    return None if p is None else [p.x, p.y, p.z]


def _bbox_dict(b: EgoBBox) -> dict:
    return {
        "object_id": b.object_id,
        "left": b.left,
        "right": b.right,
        "bottom": b.bottom,
        "top": b.top,
        "trigger": {
            "left": b.trigger_region.left,
            "right": b.trigger_region.right,
            "bottom": b.trigger_region.bottom,
            "top": b.trigger_region.top,
        },
        "is_surface": b.is_surface,
        "depth_m": round(b.centroid_depth_m, 6),
    }


@dataclass(frozen=True)
class _DwellSignature:
    object_id: str | None
    count: int
    inhibited: bool


class Session:
    def __init__(self, config: AppConfig, seed: int = 0, log: SessionLog | None = None):
        self.config = config
        self.seed = seed
        self.scene: Scene = config.scene
        self.robot: RobotState = RobotState.at_home(config.robot)
        self.fsm_state: FsmState = FsmState.OPEN_EMPTY
        self.dwell: DwellState = DwellState.idle()
        self.t_sim: float = 0.0
        self.busy_until_sim: float = 0.0
        self.events: list[dict] = []
        self._seq = 0
        self._dt = 1.0 / config.sample_rate_hz
        self._base_scene = config.scene
        self._rng_fail = random.Random(f"{seed}:robot")
        self._rng_glove = random.Random(f"{seed}:glove")
        self._cam_to_scene: RigidTransform = compose(config.world_to_robot, config.head_pose)
        self._bbox_cache: tuple[int, list[EgoBBox]] | None = None
        self._last_dwell_sig = _DwellSignature(None, 0, False)
        self._out: list[dict] = []
        self._log = log
        if log is not None:
            log.header(config.doc, seed)
        self._emit_snapshot()
        self.events.extend(self._out)
        if log is not None:
            for event in self._out:
                log.record_out(event)
        self._out = []

    # -- public API -------------------------------------------------------

    @property
    def camera(self) -> CameraModel:
        return self.config.camera

    def bboxes(self) -> list[EgoBBox]:
        if self._bbox_cache is None or self._bbox_cache[0] != self.scene.revision:
            boxes = project_bboxes(self.scene, self._cam_to_scene, self.config.camera)
            self._bbox_cache = (self.scene.revision, boxes)
        return self._bbox_cache[1]

    def ground_truth_depth(self, px: float, py: float) -> float:
        return raycast_depth(self.scene, self._cam_to_scene, self.config.camera, px, py)

    def project_to_pixels(self, p: Point3) -> GazePixel:
        """Pixel under a scene-frame point; the inverse of the gaze path."""
        return project_point(apply(invert(self._cam_to_scene), p), self.config.camera)

    def handle_message(self, msg: dict) -> list[dict]:
        """Process one inbound message; returns the events it produced."""
        if self._log is not None:
            self._log.record_in(msg)
        self._out = []
        try:
            self._dispatch(msg)
        except GazeGrammarError as exc:
            self._emit("error", {"message": str(exc)})
            self._resync_fsm()
        self.events.extend(self._out)
        if self._log is not None:
            for event in self._out:
                self._log.record_out(event)
        return self._out

    def gaze(self, px: float, py: float, depth_m: float | None = None) -> list[dict]:
        payload: dict = {"px": px, "py": py}
        if depth_m is not None:
            payload["depth_m"] = depth_m
        return self.handle_message({"v": 1, "type": "gaze_sample", "payload": payload})

    def reset(self, seed: int | None = None) -> list[dict]:
        return self.handle_message({"v": 1, "type": "reset", "payload": {"seed": seed}})

    def emit_task_result(self, payload: dict) -> list[dict]:
        """Annotate the stream with a task outcome; routed through the
        message path so recorded logs replay it."""
        return self.handle_message({"v": 1, "type": "task_result", "payload": payload})

    def close(self) -> None:
        if self._log is not None:
            self._log.close()

    # -- message handling -------------------------------------------------

    def _dispatch(self, msg: dict) -> None:
        if not isinstance(msg, dict) or msg.get("v") != 1 or "type" not in msg:
            self._emit("error", {"message": "malformed message: need {v: 1, type, payload}"})
            return
        kind = msg["type"]
        payload = msg.get("payload") or {}
        if kind == "gaze_sample":
            self._on_gaze(payload)
        elif kind == "reset":
            self._on_reset(payload)
        elif kind == "task_result":
            self._emit("task_result", payload if isinstance(payload, dict) else {})
        elif kind == "ping":
            pass
        else:
            self._emit("error", {"message": f"unknown message type {kind!r}"})

    def _on_gaze(self, payload: dict) -> None:
        try:
            px = float(payload["px"])
            py = float(payload["py"])
        except (KeyError, TypeError, ValueError):
            self._emit("error", {"message": "gaze_sample payload needs numeric px and py"})
            return
        depth_raw = payload.get("depth_m")
        if depth_raw is None:
            depth = self.ground_truth_depth(px, py)
        else:
            try:
                depth = float(depth_raw)
            except (TypeError, ValueError):
                self._emit("error", {"message": "gaze_sample depth_m must be a number or null"})
                return

        self.t_sim += self._dt
        pixel = GazePixel(px, py, depth)
        point: Point3 | None
        try:
            point = gaze_to_robot_frame(
                pixel, self.config.camera, self.config.head_pose, self.config.world_to_robot
            )
        except GazeGrammarError:
            point = None
        object_id = classify_gaze(px, py, self.bboxes()) if point is not None else None
        during_motion = self.t_sim < self.busy_until_sim

        self._emit(
            "gaze_reading",
            {
                "px": px,
                "py": py,
                "depth_m": depth,
                "object_id": object_id,
                "point": _point_list(point),
                "during_motion": during_motion,
            },
        )
        if during_motion:
            return

        self.dwell, fired = update_dwell(self.dwell, object_id if point is not None else None, point)
        sig = _DwellSignature(self.dwell.object_id, self.dwell.count, self.dwell.inhibited)
        if sig != self._last_dwell_sig:
            self._last_dwell_sig = sig
            self._emit(
                "dwell_progress",
                {
                    "object_id": sig.object_id,
                    "count": sig.count,
                    "threshold": DWELL_SAMPLES,
                    "inhibited": sig.inhibited,
                },
            )
        if fired is not None:
            self._fsm_round(fired)

    def _on_reset(self, payload: dict) -> None:
        seed = payload.get("seed")
        if seed is None:
            self.scene = self._base_scene
        else:
            self.scene = randomize_grid_placement(self._base_scene, int(seed))
        self.robot = RobotState.at_home(self.config.robot)
        self.fsm_state = FsmState.OPEN_EMPTY
        self.dwell = DwellState.idle()
        self._last_dwell_sig = _DwellSignature(None, 0, False)
        self.t_sim = 0.0
        self.busy_until_sim = 0.0
        self._bbox_cache = None
        self._emit_snapshot()

    # -- grammar and robot ------------------------------------------------

    def _read_glove(self) -> GraspAssessment:
        telemetry = simulate_telemetry(
            self.robot.hand,
            self.robot.held_object_id is not None,
            self._rng_glove,
            self.config.glove_noise_sd_n,
        )
        return assess(telemetry, self.config.glove)

    def _target_position(self, obj, intent: Intent) -> Point3:
        if obj.gp.graspable:
            return obj.position
        if obj.is_surface:
            held = (
                self.scene.get(self.robot.held_object_id)
                if self.robot.held_object_id is not None
                else None
            )
            ext_z = float(held.extents[2]) if held is not None else 0.05
            return Point3(
                intent.point.x, intent.point.y, obj.top_z() + ext_z + DROP_CLEARANCE_M, "robot"
            )
        return Point3(obj.position.x, obj.position.y, obj.top_z() + POUR_CLEARANCE_M, "robot")

    def _fsm_round(self, intent: Intent | None) -> None:
        self._consult(intent)
        # Failure chain: a lost grasp settles back to OPEN_EMPTY in at most
        # two further consults (holding -> CLOSED_EMPTY -> release).
        for _ in range(4):
            if self.fsm_state is FsmState.CLOSED_EMPTY:
                self._consult(None)
                continue
            if self.fsm_state in (FsmState.HOLDING_ITEM, FsmState.HOLDING_POURABLE):
                if self._read_glove().failed_grasp:
                    self._consult(None)
                    continue
            break

    def _consult(self, intent: Intent | None) -> None:
        glove_state = self._read_glove()
        if intent is not None:
            obj = self.scene.get(intent.object_id)
            target = self._target_position(obj, intent)
            inp = TransitionInput(
                glove=glove_state,
                intent_gp=obj.gp,
                intent_object_id=intent.object_id,
                intent_point=intent.point,
                target_position=target,
                reachable=in_workspace(target, self.scene.workspace),
            )
        else:
            inp = TransitionInput(glove=glove_state)

        result = fsm_mod.step(
            self.fsm_state, inp, container_gaze_pours=self.config.container_gaze_pours
        )
        prev = self.fsm_state
        self.fsm_state = result.next_state
        self._emit(
            "fsm_transition",
            {
                "from": prev.value,
                "to": result.next_state.value,
                "reason": result.reason,
                "actions": [
                    {
                        "kind": a.kind.value,
                        "object_id": a.object_id,
                        "target": _point_list(a.target),
                    }
                    for a in result.actions
                ],
            },
        )
        if result.actions:
            revision_before = self.scene.revision
            self._execute(result.actions)
            if self.scene.revision != revision_before:
                self._emit_snapshot()
            # After the arm settles the user naturally re-fixates; drop the
            # stale run so the next dwell starts clean.
            self.dwell = DwellState.idle()
            self._last_dwell_sig = _DwellSignature(None, 0, False)

    def _execute(self, actions: tuple[RobotAction, ...]) -> None:
        t = max(self.t_sim, self.busy_until_sim)
        for action in actions:
            self._emit(
                "robot_action_started",
                {
                    "action": action.kind.value,
                    "object_id": action.object_id,
                    "target": _point_list(action.target),
                    "t_start": round(t, 6),
                },
            )
            self.robot, self.scene, outcome = robot_mod.execute(
                self.robot, action, self.scene, self.config.robot, self._rng_fail
            )
            t += outcome.duration_s
            self._emit(
                "robot_action_finished",
                {
                    "action": action.kind.value,
                    "ok": outcome.ok,
                    "reason": outcome.reason,
                    "duration_s": round(outcome.duration_s, 6),
                    "t_end": round(t, 6),
                    "hand": self.robot.hand,
                    "held_object_id": self.robot.held_object_id,
                    "tcp": _point_list(self.robot.tcp),
                },
            )
            if not outcome.ok:
                break
        self.busy_until_sim = t

    def _resync_fsm(self) -> None:
        """Recover a consistent grammar state from ground truth after an
        internal error; should never fire in normal operation."""
        if self.robot.held_object_id is None:
            self.fsm_state = (
                FsmState.CLOSED_EMPTY if self.robot.hand == "closed" else FsmState.OPEN_EMPTY
            )
        else:
            gp = self.scene.get(self.robot.held_object_id).gp
            self.fsm_state = (
                FsmState.HOLDING_POURABLE if gp.pourable else FsmState.HOLDING_ITEM
            )

    # -- events -----------------------------------------------------------

    def _emit(self, kind: str, payload: dict) -> dict:
        if kind not in EVENT_KINDS:
            raise ProtocolError(f"unknown event kind {kind!r}")
        event = {
            "v": 1,
            "seq": self._seq,
            "t_sim": round(self.t_sim, 6),
            "kind": kind,
            "payload": payload,
        }
        self._seq += 1
        self._out.append(event)
        return event

    def _emit_snapshot(self) -> None:
        self._emit(
            "scene_snapshot",
            {
                "scene": scene_to_dict(self.scene),
                "bboxes": [_bbox_dict(b) for b in self.bboxes()],
                "fsm_state": self.fsm_state.value,
                "robot": {
                    "tcp": _point_list(self.robot.tcp),
                    "hand": self.robot.hand,
                    "held_object_id": self.robot.held_object_id,
                },
                "camera": {
                    "width_px": self.config.camera.width_px,
                    "height_px": self.config.camera.height_px,
                },
                "busy_until_sim": round(self.busy_until_sim, 6),
            },
        )


def replay_log(path: str | Path) -> tuple[bool, str]:
    """Re-run a recorded session and compare its events byte for byte.

    Returns (ok, detail); detail names the first divergent line when not ok.
    """
    lines = Path(path).read_text().splitlines()
    if not lines:
        return False, "empty log"
    header = json.loads(lines[0])
    if header.get("type") != "session_open":
        return False, "first line is not a session_open header"

    from .config import config_from_dict

    cfg = config_from_dict(header["config"])
    session = Session(cfg, seed=int(header["seed"]))
    produced = list(session.events)
    expected_out: list[str] = []
    for line in lines[1:]:
        entry = json.loads(line)
        if entry["type"] == "in":
            produced.extend(session.handle_message(entry["msg"]))
        elif entry["type"] == "out":
            expected_out.append(canonical_json(entry["event"]))
    got = [canonical_json(e) for e in produced]
    if len(got) != len(expected_out):
        return False, f"event count mismatch: log has {len(expected_out)}, replay produced {len(got)}"
    for i, (a, b) in enumerate(zip(expected_out, got)):
        if a != b:
            return False, f"divergence at event {i}:\n  log:    {a}\n  replay: {b}"
    return True, f"{len(got)} events identical"
