"""3D gaze-point geometry: pixel -> angle -> metric backprojection, plus
rigid-frame transforms.

The gaze construction, step by step (centre-origin pixels, +x right,
+y up, +z out along the optical axis):

  1. pixel -> gaze angles
       alpha_h = arctan((px / (W/2)) * tan(half_fov_h))     (vertical alike)
     so the image border maps exactly to the half-FOV angle.

  2. gaze angles + Euclidean distance d -> plane projections
     d_h (resp. d_v) is the projection of the gaze ray of length d onto the
     horizontal (resp. vertical) plane through the optical axis.  They solve

       sin^2(alpha_h) * d_h^2 + d_v^2 = d^2
       d_h^2 + sin^2(alpha_v) * d_v^2 = d^2

     whose closed form is

       d_h^2 = d^2 * cos^2(alpha_v) / (1 - sin^2(alpha_h) sin^2(alpha_v))
       d_v^2 = d^2 * cos^2(alpha_h) / (1 - sin^2(alpha_h) sin^2(alpha_v))

  3. projections -> Cartesian point
       g_x = d_h * sin(alpha_h)
       g_y = d_v * sin(alpha_v)
       g_z = +sqrt(d^2 - g_x^2 - g_y^2)    (gazed surfaces sit in front)

The result is algebraically identical to standard pinhole backprojection
g = d * (t_h, t_v, 1) / sqrt(1 + t_h^2 + t_v^2) with t = tan(alpha); the
norm of the output equals d by construction.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .errors import (
    CalibrationError,
    DepthError,
    FrameMismatchError,
    PixelBoundsError,
)

CAMERA = "camera"
WORLD = "world"
ROBOT = "robot"

_ORTHO_TOL = 1e-9


@dataclass(frozen=True)
class CameraModel:
    """Image extents plus half-FOV angles; defines the pixel->angle mapping."""

    width_px: int = 1280
    height_px: int = 720
    half_fov_h: float = math.radians(34.5)
    half_fov_v: float = math.radians(21.0)

    def __post_init__(self) -> None:
        if self.width_px < 2 or self.height_px < 2:
            raise ValueError("camera resolution must be at least 2x2 pixels")
        if not (0.0 < self.half_fov_h < math.pi / 2):
            raise ValueError("half_fov_h must lie in (0, pi/2)")
        if not (0.0 < self.half_fov_v < math.pi / 2):
            raise ValueError("half_fov_v must lie in (0, pi/2)")

    @property
    def tan_h(self) -> float:
        return math.tan(self.half_fov_h)

    @property
    def tan_v(self) -> float:
        return math.tan(self.half_fov_v)


@dataclass(frozen=True)
class GazePixel:
    """One gaze sample: centre-origin pixel coordinates plus the Euclidean
    distance from the camera to the gazed surface.  Validation happens in
    the operations (bounds depend on the camera model)."""

    px: float
    py: float
    depth_m: float


@dataclass(frozen=True)
class GazeAngles:
    alpha_h: float
    alpha_v: float


@dataclass(frozen=True)
class Point3:
    x: float
    y: float
    z: float
    frame: str = CAMERA

    def as_array(self) -> np.ndarray:
        return np.array([self.x, self.y, self.z], dtype=np.float64)

    @staticmethod
    def from_array(v, frame: str) -> "Point3":
        return Point3(float(v[0]), float(v[1]), float(v[2]), frame)


@dataclass(frozen=True)
class RigidTransform:
    """Pose relating two named frames: p_to = rotation @ p_from + translation."""

    rotation: np.ndarray
    translation: np.ndarray
    from_frame: str
    to_frame: str

    def __post_init__(self) -> None:
        r = np.asarray(self.rotation, dtype=np.float64).reshape(3, 3)
        t = np.asarray(self.translation, dtype=np.float64).reshape(3)
        object.__setattr__(self, "rotation", r)
        object.__setattr__(self, "translation", t)
        err = np.abs(r @ r.T - np.eye(3)).max()
        if err > _ORTHO_TOL:
            raise ValueError(f"rotation is not orthonormal (max residual {err:.2e})")
        if abs(np.linalg.det(r) - 1.0) > _ORTHO_TOL:
            raise ValueError("rotation determinant is not +1 (improper rotation)")


def identity_transform(from_frame: str, to_frame: str) -> RigidTransform:
    return RigidTransform(np.eye(3), np.zeros(3), from_frame, to_frame)


def translation_transform(t, from_frame: str, to_frame: str) -> RigidTransform:
    return RigidTransform(np.eye(3), np.asarray(t, dtype=np.float64), from_frame, to_frame)


def rotation_about_z(angle: float) -> np.ndarray:
    c, s = math.cos(angle), math.sin(angle)
    return np.array([[c, -s, 0.0], [s, c, 0.0], [0.0, 0.0, 1.0]])


def look_at(eye, target, up=(0.0, 0.0, 1.0), from_frame: str = CAMERA,
            to_frame: str = WORLD) -> RigidTransform:
    """Camera pose with the optical axis aimed from `eye` at `target`.

    Camera convention: +x image-right, +y image-up, +z forward.  `up` must
    not be parallel to the view direction.
    """
    eye = np.asarray(eye, dtype=np.float64)
    fwd = np.asarray(target, dtype=np.float64) - eye
    n = np.linalg.norm(fwd)
    if n < 1e-12:
        raise ValueError("look_at: eye and target coincide")
    z_cam = fwd / n
    right = np.cross(np.asarray(up, dtype=np.float64), z_cam)
    rn = np.linalg.norm(right)
    if rn < 1e-12:
        raise ValueError("look_at: up is parallel to the view direction")
    x_cam = right / rn
    y_cam = np.cross(z_cam, x_cam)
    rot = np.column_stack([x_cam, y_cam, z_cam])
    return RigidTransform(rot, eye, from_frame, to_frame)


def compose(a: RigidTransform, b: RigidTransform) -> RigidTransform:
    """Transform applying b first, then a.  Frames must chain: b goes
    X -> Y and a goes Y -> Z, yielding X -> Z."""
    if a.from_frame != b.to_frame:
        raise FrameMismatchError(
            f"cannot compose: inner output frame '{b.to_frame}' != outer input frame '{a.from_frame}'"
        )
    return RigidTransform(
        a.rotation @ b.rotation,
        a.rotation @ b.translation + a.translation,
        b.from_frame,
        a.to_frame,
    )


def invert(t: RigidTransform) -> RigidTransform:
    rt = t.rotation.T
    return RigidTransform(rt, -rt @ t.translation, t.to_frame, t.from_frame)


def apply(t: RigidTransform, p: Point3) -> Point3:
    if p.frame != t.from_frame:
        raise FrameMismatchError(
            f"point is in frame '{p.frame}' but transform maps from '{t.from_frame}'"
        )
    v = t.rotation @ p.as_array() + t.translation
    return Point3.from_array(v, t.to_frame)


def pixel_to_angles(pixel: GazePixel, cam: CameraModel) -> GazeAngles:
    """Map a centre-origin gaze pixel to horizontal/vertical gaze angles."""
    half_w = cam.width_px / 2.0
    half_h = cam.height_px / 2.0
    if not (abs(pixel.px) <= half_w):
        raise PixelBoundsError(f"px={pixel.px} outside [-{half_w}, {half_w}]")
    if not (abs(pixel.py) <= half_h):
        raise PixelBoundsError(f"py={pixel.py} outside [-{half_h}, {half_h}]")
    alpha_h = math.atan((pixel.px / half_w) * cam.tan_h)
    alpha_v = math.atan((pixel.py / half_h) * cam.tan_v)
    return GazeAngles(alpha_h, alpha_v)


def solve_projections(angles: GazeAngles, depth_m: float) -> tuple[float, float]:
    """Positive roots (d_h, d_v) of the two-equation projection system.

    The denominator 1 - sin^2*sin^2 is strictly positive for angles inside
    (-pi/2, pi/2), so the system is always solvable.
    """
    if depth_m <= 0 or not math.isfinite(depth_m):
        raise DepthError(f"depth must be positive and finite, got {depth_m}")
    sh2 = math.sin(angles.alpha_h) ** 2
    sv2 = math.sin(angles.alpha_v) ** 2
    denom = 1.0 - sh2 * sv2
    d2 = depth_m * depth_m
    d_h = math.sqrt(d2 * (1.0 - sv2) / denom)
    d_v = math.sqrt(d2 * (1.0 - sh2) / denom)
    return d_h, d_v


def backproject(pixel: GazePixel, cam: CameraModel) -> Point3:
    """Gaze pixel + distance -> 3D point in the camera frame; ||result|| equals
    the input distance by construction."""
    angles = pixel_to_angles(pixel, cam)
    d_h, d_v = solve_projections(angles, pixel.depth_m)
    g_x = d_h * math.sin(angles.alpha_h)
    g_y = d_v * math.sin(angles.alpha_v)
    d2 = pixel.depth_m * pixel.depth_m
    g_z = math.sqrt(max(d2 - g_x * g_x - g_y * g_y, 0.0))
    return Point3(g_x, g_y, g_z, CAMERA)


def project_point(p: Point3, cam: CameraModel) -> GazePixel:
    """Forward projection of a camera-frame point to a centre-origin pixel,
    with depth set to the Euclidean distance.  Inverse of `backproject`."""
    if p.frame != CAMERA:
        raise FrameMismatchError(f"project_point needs a camera-frame point, got '{p.frame}'")
    if p.z <= 0:
        raise DepthError("point is not in front of the camera")
    px = (cam.width_px / 2.0) * (p.x / p.z) / cam.tan_h
    py = (cam.height_px / 2.0) * (p.y / p.z) / cam.tan_v
    return GazePixel(px, py, math.sqrt(p.x * p.x + p.y * p.y + p.z * p.z))


def gaze_to_robot_frame(
    pixel: GazePixel,
    cam: CameraModel,
    head_pose: RigidTransform,
    world_to_robot: RigidTransform,
) -> Point3:
    """Full chain: backproject in the camera frame, then camera -> world ->
    robot via the head pose and the fixed world/robot registration."""
    if head_pose.from_frame != CAMERA or head_pose.to_frame != WORLD:
        raise FrameMismatchError(
            f"head pose must map camera->world, got {head_pose.from_frame}->{head_pose.to_frame}"
        )
    if world_to_robot.from_frame != WORLD or world_to_robot.to_frame != ROBOT:
        raise FrameMismatchError(
            f"world/robot registration must map world->robot, got "
            f"{world_to_robot.from_frame}->{world_to_robot.to_frame}"
        )
    return apply(world_to_robot, apply(head_pose, backproject(pixel, cam)))


_MAX_WRIST_OFFSET_M = 0.5


@dataclass(frozen=True)
class WristOffset:
    """Vector from the user's grasp point to the robot TCP, robot frame.
    Added to every reach target."""

    offset: np.ndarray = field(default_factory=lambda: np.zeros(3))

    def __post_init__(self) -> None:
        object.__setattr__(self, "offset", np.asarray(self.offset, dtype=np.float64).reshape(3))


def calibrate_wrist_offset(gaze_at_palm: Point3, robot_tcp: Point3) -> WristOffset:
    """Offset = TCP - palm gaze point.  Magnitudes >= 0.5 m indicate the user
    was not actually looking at their palm; reject those."""
    if gaze_at_palm.frame != ROBOT or robot_tcp.frame != ROBOT:
        raise FrameMismatchError(
            f"calibration points must be in the robot frame, got "
            f"'{gaze_at_palm.frame}' and '{robot_tcp.frame}'"
        )
    offset = robot_tcp.as_array() - gaze_at_palm.as_array()
    magnitude = float(np.linalg.norm(offset))
    if magnitude >= _MAX_WRIST_OFFSET_M:
        raise CalibrationError(
            f"wrist offset magnitude {magnitude:.3f} m >= {_MAX_WRIST_OFFSET_M} m; "
            "calibration rejected"
        )
    return WristOffset(offset)


def transform_to_dict(t: RigidTransform) -> dict:
    return {
        "rotation": [[float(v) for v in row] for row in t.rotation],
        "translation": [float(v) for v in t.translation],
        "from_frame": t.from_frame,
        "to_frame": t.to_frame,
    }


def transform_from_dict(d: dict) -> RigidTransform:
    return RigidTransform(
        np.array(d["rotation"], dtype=np.float64),
        np.array(d["translation"], dtype=np.float64),
        d["from_frame"],
        d["to_frame"],
    )


def point_to_list(p: Point3) -> list[float]:
    return [p.x, p.y, p.z]
