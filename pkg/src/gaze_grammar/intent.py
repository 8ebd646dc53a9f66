"""Dwell-based intent decoding.

Each object projects a trigger zone beside its ego-view bounding box.  An
intent fires when 15 consecutive gaze samples classify to the same object;
the fired intent carries the mean 3D gaze point of those samples.  After
firing, the run is inhibited so a continued stare cannot re-trigger; looking
away (or at a different object) re-arms it.

Looking straight at an object's body is deliberately neutral: it neither
advances that object's count nor hands the sample to the table behind it.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

from .errors import GazeGrammarError
from .geometry import (
    CameraModel,
    GazePixel,
    Point3,
    RigidTransform,
    gaze_to_robot_frame,
)
from .scene import EgoBBox

DWELL_SAMPLES = 15


@dataclass(frozen=True)
class DwellState:
    object_id: str | None = None
    count: int = 0
    inhibited: bool = False
    point_sum: tuple[float, float, float] = (0.0, 0.0, 0.0)

    @staticmethod
    def idle() -> "DwellState":
        return DwellState()


@dataclass(frozen=True)
class Intent:
    object_id: str
    point: Point3
    sample_count: int = DWELL_SAMPLES


def classify_gaze(px: float, py: float, bboxes: list[EgoBBox]) -> str | None:
    """Map a pixel to the object whose trigger zone it falls in.

    Overlapping zones resolve to the nearest zone centre.  Object bodies are
    neutral and also mask the surface behind them; the surface itself is
    checked last so a drop spot can be designated anywhere else on it.
    """
    hits = [
        b
        for b in bboxes
        if not b.is_surface and b.trigger_region.contains(px, py)
    ]
    if hits:
        best = min(
            hits,
            key=lambda b: math.hypot(
                px - b.trigger_region.center[0], py - b.trigger_region.center[1]
            ),
        )
        return best.object_id
    if any(not b.is_surface and b.body.contains(px, py) for b in bboxes):
        return None
    for b in bboxes:
        if b.is_surface and b.trigger_region.contains(px, py):
            return b.object_id
    return None


def update_dwell(
    state: DwellState, object_id: str | None, point: Point3 | None = None
) -> tuple[DwellState, Intent | None]:
    """Advance the dwell counter by one sample; returns the fired intent on
    exactly the sample where the count reaches the threshold."""
    if object_id is None:
        return DwellState.idle(), None
    coords = (point.x, point.y, point.z) if point is not None else (0.0, 0.0, 0.0)
    if object_id != state.object_id:
        return DwellState(object_id, 1, False, coords), None
    if state.inhibited:
        return state, None
    sx, sy, sz = state.point_sum
    new_sum = (sx + coords[0], sy + coords[1], sz + coords[2])
    count = state.count + 1
    if count < DWELL_SAMPLES:
        return DwellState(object_id, count, False, new_sum), None
    frame = point.frame if point is not None else "robot"
    mean = Point3(
        new_sum[0] / DWELL_SAMPLES,
        new_sum[1] / DWELL_SAMPLES,
        new_sum[2] / DWELL_SAMPLES,
        frame,
    )
    fired = Intent(object_id, mean)
    return DwellState(object_id, DWELL_SAMPLES, True, new_sum), fired


def decode(
    state: DwellState,
    pixel: GazePixel,
    cam: CameraModel,
    head_pose: RigidTransform,
    world_to_robot: RigidTransform,
    bboxes: list[EgoBBox],
) -> tuple[DwellState, Intent | None, str | None, Point3 | None]:
    """One full decoding step for a raw gaze sample.

    Returns (new state, fired intent or None, classified object id, robot
    frame gaze point).  A sample with an unusable depth or an out-of-view
    pixel resets the dwell run instead of raising: sensor dropouts look like
    the user glancing away.
    """
    try:
        point = gaze_to_robot_frame(pixel, cam, head_pose, world_to_robot)
    except GazeGrammarError:
        new_state, _ = update_dwell(state, None)
        return new_state, None, None, None
    object_id = classify_gaze(pixel.px, pixel.py, bboxes)
    new_state, fired = update_dwell(state, object_id, point)
    return new_state, fired, object_id, point
