"""Tabletop world model: objects with grasp/pour capability bits, the 3x3
placement grid, workspace bounds, ego-view bounding boxes, and a ray-cast
depth query standing in for the depth camera."""

from __future__ import annotations

import math
import random
from dataclasses import dataclass, field, replace

import numpy as np

from .errors import FrameMismatchError, SceneError
from .geometry import CAMERA, ROBOT, CameraModel, GazePixel, Point3, RigidTransform, invert

GRID_CELLS = 9
GRID_SIDE = 3
DEFAULT_GRID_PITCH_M = 0.13

# Trigger-zone geometry: the intent zone abuts the object's right edge and
# scales with apparent size, with a floor so distant objects stay selectable.
TRIGGER_WIDTH_FRAC = 0.25
TRIGGER_MIN_PX = 40.0

# label -> (graspable, pourable); table is the only label allowed to carry 01
LABEL_TAXONOMY: dict[str, tuple[bool, bool]] = {
    "apple": (True, False),
    "orange": (True, False),
    "cup": (True, True),
    "bottle": (True, True),
    "bowl": (False, False),
    "large_container": (False, False),
    "table": (False, True),
}

DEFAULT_EXTENTS: dict[str, tuple[float, float, float]] = {
    "apple": (0.035, 0.035, 0.035),
    "orange": (0.035, 0.035, 0.035),
    "cup": (0.035, 0.035, 0.05),
    "bottle": (0.035, 0.035, 0.08),
    "bowl": (0.05, 0.05, 0.04),
    "large_container": (0.07, 0.07, 0.05),
    "table": (0.30, 0.30, 0.02),
}


@dataclass(frozen=True)
class GPBits:
    graspable: bool
    pourable: bool

    @property
    def code(self) -> str:
        return f"{int(self.graspable)}{int(self.pourable)}"

    @staticmethod
    def from_code(code: str) -> "GPBits":
        if code not in ("00", "01", "10", "11"):
            raise SceneError(f"invalid gp code {code!r}; expected two bits")
        return GPBits(code[0] == "1", code[1] == "1")


TABLE_GP = GPBits(False, True)


@dataclass(frozen=True)
class SceneObject:
    id: str
    label: str
    gp: GPBits
    position: Point3
    extents: np.ndarray
    grid_cell: int | None = None

    def __post_init__(self) -> None:
        ext = np.asarray(self.extents, dtype=np.float64).reshape(3)
        if not (ext > 0).all():
            raise SceneError(f"object {self.id!r}: extents must be positive, got {ext.tolist()}")
        object.__setattr__(self, "extents", ext)

    @property
    def is_surface(self) -> bool:
        """True for the table: its whole top face doubles as the intent zone."""
        return self.gp == TABLE_GP

    def top_z(self) -> float:
        return self.position.z + float(self.extents[2])


@dataclass(frozen=True)
class Workspace:
    min: np.ndarray
    max: np.ndarray

    def __post_init__(self) -> None:
        lo = np.asarray(self.min, dtype=np.float64).reshape(3)
        hi = np.asarray(self.max, dtype=np.float64).reshape(3)
        if not (lo < hi).all():
            raise SceneError("workspace min must be strictly below max on every axis")
        object.__setattr__(self, "min", lo)
        object.__setattr__(self, "max", hi)


@dataclass(frozen=True)
class Rect:
    """Pixel rectangle, centre-origin convention: left < right, bottom < top."""

    left: float
    right: float
    bottom: float
    top: float

    def contains(self, px: float, py: float) -> bool:
        return self.left <= px <= self.right and self.bottom <= py <= self.top

    @property
    def center(self) -> tuple[float, float]:
        return (self.left + self.right) / 2.0, (self.bottom + self.top) / 2.0


@dataclass(frozen=True)
class EgoBBox:
    object_id: str
    left: float
    right: float
    bottom: float
    top: float
    trigger_region: Rect
    is_surface: bool = False
    centroid_depth_m: float = 0.0

    @property
    def body(self) -> Rect:
        return Rect(self.left, self.right, self.bottom, self.top)


@dataclass(frozen=True)
class Grid:
    origin: np.ndarray
    pitch_m: float = DEFAULT_GRID_PITCH_M

    def __post_init__(self) -> None:
        object.__setattr__(self, "origin", np.asarray(self.origin, dtype=np.float64).reshape(3))
        if self.pitch_m <= 0:
            raise SceneError("grid pitch must be positive")

    def cell_center(self, cell: int) -> np.ndarray:
        if not 0 <= cell < GRID_CELLS:
            raise SceneError(f"grid cell {cell} outside 0..{GRID_CELLS - 1}")
        return self.origin + np.array(
            [self.pitch_m * (cell % GRID_SIDE), self.pitch_m * (cell // GRID_SIDE), 0.0]
        )

    def cell_of(self, x: float, y: float) -> int | None:
        """Cell whose square contains (x, y), or None when off-grid."""
        col = math.floor((x - self.origin[0]) / self.pitch_m + 0.5)
        row = math.floor((y - self.origin[1]) / self.pitch_m + 0.5)
        if 0 <= col < GRID_SIDE and 0 <= row < GRID_SIDE:
            return row * GRID_SIDE + col
        return None


@dataclass(frozen=True)
class Scene:
    objects: tuple[SceneObject, ...]
    workspace: Workspace
    grid: Grid
    drop_target_cell: int | None = None
    held_object_id: str | None = None
    poured_into: frozenset[str] = field(default_factory=frozenset)
    revision: int = 0

    def get(self, object_id: str) -> SceneObject:
        for obj in self.objects:
            if obj.id == object_id:
                return obj
        raise SceneError(f"no object with id {object_id!r}")

    def table(self) -> SceneObject | None:
        for obj in self.objects:
            if obj.is_surface:
                return obj
        return None

    def movable_objects(self) -> list[SceneObject]:
        return [o for o in self.objects if not o.is_surface]

    def with_object(self, obj: SceneObject) -> "Scene":
        objs = tuple(obj if o.id == obj.id else o for o in self.objects)
        return replace(self, objects=objs, revision=self.revision + 1)

    def occupied_cells(self) -> set[int]:
        return {o.grid_cell for o in self.objects if o.grid_cell is not None}


def load_scene(description: dict) -> Scene:
    """Build a validated Scene from a parsed scene document.

    Document shape: {"objects": [{id, label, gp?, grid_cell? | position?,
    extents?}], "grid": {origin, pitch_m}, "workspace": {min, max},
    "drop_target_cell"?}.
    """
    if not isinstance(description, dict):
        raise SceneError("scene document must be a JSON object")
    for key in ("objects", "grid", "workspace"):
        if key not in description:
            raise SceneError(f"scene document missing required key {key!r}")

    grid_doc = description["grid"]
    try:
        grid = Grid(np.array(grid_doc["origin"], dtype=np.float64), float(grid_doc["pitch_m"]))
    except (KeyError, TypeError, ValueError) as exc:
        raise SceneError(f"malformed grid section: {exc}") from exc

    ws_doc = description["workspace"]
    try:
        workspace = Workspace(
            np.array(ws_doc["min"], dtype=np.float64), np.array(ws_doc["max"], dtype=np.float64)
        )
    except (KeyError, TypeError, ValueError) as exc:
        raise SceneError(f"malformed workspace section: {exc}") from exc

    objects: list[SceneObject] = []
    seen_ids: set[str] = set()
    for entry in description["objects"]:
        if not isinstance(entry, dict) or "id" not in entry or "label" not in entry:
            raise SceneError(f"object entry must carry id and label: {entry!r}")
        oid = str(entry["id"])
        label = str(entry["label"])
        if oid in seen_ids:
            raise SceneError(f"duplicate object id {oid!r}")
        seen_ids.add(oid)

        if "gp" in entry:
            gp = GPBits.from_code(str(entry["gp"]))
        elif label in LABEL_TAXONOMY:
            gp = GPBits(*LABEL_TAXONOMY[label])
        else:
            raise SceneError(f"object {oid!r}: unknown label {label!r} and no explicit gp")
        if gp == TABLE_GP and label != "table":
            raise SceneError(
                f"object {oid!r}: gp=01 is reserved for the table surface"
            )
        if label in LABEL_TAXONOMY and gp != GPBits(*LABEL_TAXONOMY[label]):
            raise SceneError(
                f"object {oid!r}: gp {gp.code} contradicts taxonomy for label {label!r}"
            )

        extents = np.asarray(
            entry.get("extents", DEFAULT_EXTENTS.get(label, (0.05, 0.05, 0.05))),
            dtype=np.float64,
        )

        grid_cell = entry.get("grid_cell")
        if grid_cell is not None:
            grid_cell = int(grid_cell)
            center = grid.cell_center(grid_cell)
            position = Point3(center[0], center[1], center[2] + float(extents[2]), ROBOT)
        elif "position" in entry:
            pos = entry["position"]
            position = Point3(float(pos[0]), float(pos[1]), float(pos[2]), ROBOT)
        elif label == "table":
            # Centre the table under the grid, top face flush with cell plane.
            center = grid.origin + np.array([grid.pitch_m, grid.pitch_m, 0.0])
            position = Point3(center[0], center[1], center[2] - float(extents[2]), ROBOT)
        else:
            raise SceneError(f"object {oid!r}: needs grid_cell or position")

        objects.append(SceneObject(oid, label, gp, position, extents, grid_cell))

    drop_cell = description.get("drop_target_cell")
    if drop_cell is not None:
        drop_cell = int(drop_cell)
        if not 0 <= drop_cell < GRID_CELLS:
            raise SceneError(f"drop_target_cell {drop_cell} outside 0..{GRID_CELLS - 1}")

    return Scene(tuple(objects), workspace, grid, drop_cell)


def randomize_grid_placement(scene: Scene, rng_seed: int) -> Scene:
    """Assign every movable object plus the drop target to distinct grid
    cells, uniformly at random; deterministic for a fixed seed."""
    movables = sorted(scene.movable_objects(), key=lambda o: o.id)
    needed = len(movables) + 1  # movable objects plus the drop-target cell
    if needed > GRID_CELLS:
        raise SceneError(
            f"{len(movables)} movable objects + drop target exceed {GRID_CELLS} grid cells"
        )
    rng = random.Random(rng_seed)
    cells = rng.sample(range(GRID_CELLS), needed)
    new_objects = list(scene.objects)
    for obj, cell in zip(movables, cells[:-1]):
        center = scene.grid.cell_center(cell)
        moved = replace(
            obj,
            grid_cell=cell,
            position=Point3(center[0], center[1], center[2] + float(obj.extents[2]), ROBOT),
        )
        new_objects[new_objects.index(scene.get(obj.id))] = moved
    return replace(
        scene,
        objects=tuple(new_objects),
        drop_target_cell=cells[-1],
        revision=scene.revision + 1,
    )


def _corners(obj: SceneObject) -> np.ndarray:
    c = obj.position.as_array()
    e = obj.extents
    signs = np.array(
        [[sx, sy, sz] for sx in (-1, 1) for sy in (-1, 1) for sz in (-1, 1)], dtype=np.float64
    )
    return c + signs * e


def project_bboxes(
    scene: Scene, head_pose: RigidTransform, cam: CameraModel
) -> list[EgoBBox]:
    """Project every visible object's corner points through the pinhole model
    and return pixel-axis-aligned hulls clipped to the image, each with its
    intent trigger zone attached.

    The held object is skipped (it travels with the hand), as are objects
    fully behind the camera.  The table's trigger zone is its own bbox: the
    placement intent is expressed by dwelling on the spot where the held
    object should go, so the whole surface must be selectable.
    """
    world_to_cam = invert(head_pose)
    half_w = cam.width_px / 2.0
    half_h = cam.height_px / 2.0
    out: list[EgoBBox] = []
    for obj in scene.objects:
        if obj.id == scene.held_object_id:
            continue
        pts_world = _corners(obj)
        pts_cam = pts_world @ world_to_cam.rotation.T + world_to_cam.translation
        front = pts_cam[pts_cam[:, 2] > 1e-9]
        if front.shape[0] == 0:
            continue
        px = half_w * (front[:, 0] / front[:, 2]) / cam.tan_h
        py = half_h * (front[:, 1] / front[:, 2]) / cam.tan_v
        left = max(float(px.min()), -half_w)
        right = min(float(px.max()), half_w)
        bottom = max(float(py.min()), -half_h)
        top = min(float(py.max()), half_h)
        if left >= right or bottom >= top:
            continue
        centroid_cam = (
            world_to_cam.rotation @ obj.position.as_array() + world_to_cam.translation
        )
        depth = float(np.linalg.norm(centroid_cam))
        if obj.is_surface:
            trigger = Rect(left, right, bottom, top)
        else:
            width = max(TRIGGER_WIDTH_FRAC * (right - left), TRIGGER_MIN_PX)
            trigger = Rect(right, right + width, bottom, top)
        out.append(
            EgoBBox(obj.id, left, right, bottom, top, trigger, obj.is_surface, depth)
        )
    return out


def in_workspace(p: Point3, w: Workspace) -> bool:
    """Closed-box membership test in the robot frame."""
    if p.frame != ROBOT:
        raise FrameMismatchError(f"workspace test needs a robot-frame point, got '{p.frame}'")
    v = p.as_array()
    return bool((v >= w.min).all() and (v <= w.max).all())


def _ray_aabb(origin: np.ndarray, direction: np.ndarray, lo: np.ndarray, hi: np.ndarray) -> float | None:
    """Smallest positive ray parameter hitting the box, slab method."""
    t_near, t_far = -math.inf, math.inf
    for axis in range(3):
        d = direction[axis]
        if abs(d) < 1e-12:
            if origin[axis] < lo[axis] or origin[axis] > hi[axis]:
                return None
            continue
        t1 = (lo[axis] - origin[axis]) / d
        t2 = (hi[axis] - origin[axis]) / d
        t_near = max(t_near, min(t1, t2))
        t_far = min(t_far, max(t1, t2))
    if t_near > t_far or t_far < 0:
        return None
    return t_near if t_near > 0 else t_far


def raycast_depth(
    scene: Scene,
    head_pose: RigidTransform,
    cam: CameraModel,
    pixel_x: float,
    pixel_y: float,
    default_m: float = 2.0,
) -> float:
    """Ground-truth depth under a pixel: Euclidean distance from the camera
    to the first scene surface along the gaze ray.  Stands in for the RGB-D
    sensor; `default_m` models the far background."""
    t_h = (pixel_x / (cam.width_px / 2.0)) * cam.tan_h
    t_v = (pixel_y / (cam.height_px / 2.0)) * cam.tan_v
    dir_cam = np.array([t_h, t_v, 1.0])
    dir_cam /= np.linalg.norm(dir_cam)
    dir_world = head_pose.rotation @ dir_cam
    origin = head_pose.translation
    best = math.inf
    for obj in scene.objects:
        if obj.id == scene.held_object_id:
            continue
        c = obj.position.as_array()
        hit = _ray_aabb(origin, dir_world, c - obj.extents, c + obj.extents)
        if hit is not None and hit < best:
            best = hit
    return float(best) if math.isfinite(best) else default_m


def scene_to_dict(scene: Scene) -> dict:
    return {
        "objects": [
            {
                "id": o.id,
                "label": o.label,
                "gp": o.gp.code,
                "position": [o.position.x, o.position.y, o.position.z],
                "extents": o.extents.tolist(),
                "grid_cell": o.grid_cell,
                "held": o.id == scene.held_object_id,
            }
            for o in scene.objects
        ],
        "workspace": {"min": scene.workspace.min.tolist(), "max": scene.workspace.max.tolist()},
        "grid": {"origin": scene.grid.origin.tolist(), "pitch_m": scene.grid.pitch_m},
        "drop_target_cell": scene.drop_target_cell,
        "poured_into": sorted(scene.poured_into),
    }
