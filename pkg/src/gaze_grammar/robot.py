"""Kinematic stand-in for the wheelchair-mounted arm.

No dynamics: a reach is a straight-line move at constant speed, grasp and
drop are instantaneous attach/detach with fixed durations, pour is a
discrete state change on the target container.  Failures are seeded
(`p_grasp_fail`, `p_slip_during_pour`) so whole experiments replay exactly.

The arm servoes its palm point, offset from the tool-centre-point by the
calibrated wrist offset: a reach to target T parks the palm on T.
"""

from __future__ import annotations

import random
from dataclasses import dataclass, replace

import numpy as np

from .errors import ProtocolError, SceneError
from .fsm import ActionKind, RobotAction
from .geometry import ROBOT, Point3, WristOffset
from .scene import Scene

REACH_SPEED_MPS = 0.25
GRASP_RADIUS_M = 0.05
GRASP_DURATION_S = 1.0
DROP_DURATION_S = 1.0
POUR_DURATION_S = 2.0
RELEASE_DURATION_S = 1.0


@dataclass(frozen=True)
class RobotConfig:
    home: tuple[float, float, float] = (0.30, 0.33, 0.70)
    reach_speed_mps: float = REACH_SPEED_MPS
    grasp_radius_m: float = GRASP_RADIUS_M
    wrist_offset: WristOffset = WristOffset()
    p_grasp_fail: float = 0.0
    p_slip_during_pour: float = 0.0

    def __post_init__(self) -> None:
        if self.reach_speed_mps <= 0:
            raise SceneError("reach speed must be positive")
        if self.grasp_radius_m <= 0:
            raise SceneError("grasp radius must be positive")
        for name in ("p_grasp_fail", "p_slip_during_pour"):
            p = getattr(self, name)
            if not 0.0 <= p <= 1.0:
                raise SceneError(f"{name} must be a probability, got {p}")


@dataclass(frozen=True)
class RobotState:
    tcp: Point3
    hand: str = "open"
    held_object_id: str | None = None

    @staticmethod
    def at_home(config: RobotConfig) -> "RobotState":
        x, y, z = config.home
        return RobotState(Point3(x, y, z, ROBOT))


@dataclass(frozen=True)
class ActionOutcome:
    ok: bool
    reason: str
    duration_s: float


def hand_point(state: RobotState, config: RobotConfig) -> np.ndarray:
    return state.tcp.as_array() - config.wrist_offset.offset


def _tcp_for_palm(target: Point3, config: RobotConfig) -> Point3:
    v = target.as_array() + config.wrist_offset.offset
    return Point3(v[0], v[1], v[2], ROBOT)


def _settle(scene: Scene, object_id: str, x: float, y: float) -> Scene:
    """Let a released object fall: snap to the grid cell under (x, y) when
    there is one, then rest on the table top."""
    obj = scene.get(object_id)
    cell = scene.grid.cell_of(x, y)
    if cell is not None:
        cx, cy, _ = scene.grid.cell_center(cell)
    else:
        cx, cy = x, y
    table = scene.table()
    rest_z = table.top_z() + float(obj.extents[2]) if table is not None else obj.position.z
    moved = replace(obj, position=Point3(cx, cy, rest_z, ROBOT), grid_cell=cell)
    return scene.with_object(moved)


def execute(
    state: RobotState,
    action: RobotAction,
    scene: Scene,
    config: RobotConfig,
    rng: random.Random,
) -> tuple[RobotState, Scene, ActionOutcome]:
    """Run one action to completion; returns the new arm state, the new
    scene, and an outcome whose duration the caller adds to simulated time."""
    if action.kind is ActionKind.REACH:
        if action.target is None:
            raise ProtocolError("Reach requires a target point")
        if action.target.frame != ROBOT:
            raise ProtocolError(f"Reach target must be in the robot frame, got '{action.target.frame}'")
        new_tcp = _tcp_for_palm(action.target, config)
        dist = float(np.linalg.norm(new_tcp.as_array() - state.tcp.as_array()))
        new_state = replace(state, tcp=new_tcp)
        new_scene = scene
        if state.held_object_id is not None:
            palm = hand_point(new_state, config)
            held = scene.get(state.held_object_id)
            new_scene = scene.with_object(
                replace(held, position=Point3(palm[0], palm[1], palm[2], ROBOT), grid_cell=None)
            )
        return new_state, new_scene, ActionOutcome(True, "reached", dist / config.reach_speed_mps)

    if action.kind is ActionKind.GRASP:
        if state.hand != "open":
            raise ProtocolError("Grasp requires an open hand")
        if state.held_object_id is not None:
            raise ProtocolError("Grasp while already holding an object")
        if action.object_id is None:
            raise ProtocolError("Grasp requires a target object id")
        obj = scene.get(action.object_id)
        palm = hand_point(state, config)
        miss = float(np.linalg.norm(palm - obj.position.as_array()))
        if miss > config.grasp_radius_m:
            # Fingers close on air; the glove will report closed-and-empty.
            return (
                replace(state, hand="closed"),
                scene,
                ActionOutcome(False, "target_out_of_grasp_range", GRASP_DURATION_S),
            )
        if rng.random() < config.p_grasp_fail:
            return (
                replace(state, hand="closed"),
                scene,
                ActionOutcome(False, "grasp_slipped", GRASP_DURATION_S),
            )
        attached = replace(
            obj,
            position=Point3(palm[0], palm[1], palm[2], ROBOT),
            grid_cell=None,
        )
        new_scene = replace(
            scene.with_object(attached),
            held_object_id=obj.id,
            revision=scene.revision + 1,
        )
        new_state = replace(state, hand="closed", held_object_id=obj.id)
        return new_state, new_scene, ActionOutcome(True, "grasped", GRASP_DURATION_S)

    if action.kind is ActionKind.DROP:
        if state.held_object_id is None:
            raise ProtocolError("Drop with nothing in hand")
        palm = hand_point(state, config)
        new_scene = _settle(scene, state.held_object_id, float(palm[0]), float(palm[1]))
        new_scene = replace(new_scene, held_object_id=None, revision=new_scene.revision + 1)
        new_state = replace(state, hand="open", held_object_id=None)
        return new_state, new_scene, ActionOutcome(True, "dropped", DROP_DURATION_S)

    if action.kind is ActionKind.POUR:
        if state.held_object_id is None:
            raise ProtocolError("Pour with nothing in hand")
        if action.object_id is None:
            raise ProtocolError("Pour requires a container id")
        container = scene.get(action.object_id)
        if rng.random() < config.p_slip_during_pour:
            # Vessel slips out mid-pour and lands in the container below.
            held = scene.get(state.held_object_id)
            landed = replace(
                held,
                position=Point3(
                    container.position.x,
                    container.position.y,
                    container.top_z() + float(held.extents[2]),
                    ROBOT,
                ),
                grid_cell=container.grid_cell,
            )
            new_scene = replace(
                scene.with_object(landed),
                held_object_id=None,
                revision=scene.revision + 1,
            )
            return (
                replace(state, held_object_id=None),
                new_scene,
                ActionOutcome(False, "slipped_during_pour", POUR_DURATION_S),
            )
        new_scene = replace(
            scene,
            poured_into=scene.poured_into | {container.id},
            revision=scene.revision + 1,
        )
        return state, new_scene, ActionOutcome(True, "poured", POUR_DURATION_S)

    if action.kind is ActionKind.RELEASE:
        if state.hand != "closed":
            raise ProtocolError("Release requires a closed hand")
        new_state = replace(state, hand="open", held_object_id=None)
        new_scene = scene
        if state.held_object_id is not None:
            palm = hand_point(state, config)
            new_scene = _settle(scene, state.held_object_id, float(palm[0]), float(palm[1]))
            new_scene = replace(new_scene, held_object_id=None, revision=new_scene.revision + 1)
        return new_state, new_scene, ActionOutcome(True, "released", RELEASE_DURATION_S)

    raise ProtocolError(f"unknown action kind {action.kind!r}")
