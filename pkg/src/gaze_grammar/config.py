"""Configuration loading.

A config file is JSON and only needs the keys that differ from the
defaults; dictionaries merge recursively, everything else replaces.  The
`scene` section is the exception: it replaces wholesale, since merging two
object lists is never what anyone means.  Unknown keys are rejected with
their dotted path so typos fail loudly instead of silently running with
defaults.

Angles live in degrees here (config boundary) and in radians everywhere
else.  Camera fields give the full field of view; the projection code works
with the half angle.
"""

from __future__ import annotations

import copy
import json
import math
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .errors import ConfigError, SceneError
from .geometry import (
    CAMERA,
    ROBOT,
    WORLD,
    CameraModel,
    RigidTransform,
    WristOffset,
    look_at,
)
from .glove import GloveThresholds
from .robot import RobotConfig
from .scene import Scene, load_scene

DEFAULT_CONFIG: dict = {
    "camera": {
        "width_px": 1280,
        "height_px": 720,
        "fov_h_deg": 69.0,
        "fov_v_deg": 42.0,
    },
    "head_pose": {
        "eye": [0.13, 0.33, 1.10],
        "target": [0.58, 0.33, 0.40],
        "up": [0.0, 0.0, 1.0],
    },
    "world_to_robot": {
        "rotation": [[1.0, 0.0, 0.0], [0.0, 1.0, 0.0], [0.0, 0.0, 1.0]],
        "translation": [0.0, 0.0, 0.0],
    },
    "robot": {
        "home": [0.30, 0.33, 0.70],
        "reach_speed_mps": 0.25,
        "grasp_radius_m": 0.05,
        "wrist_offset": [0.0, 0.0, 0.0],
        "p_grasp_fail": 0.0,
        "p_slip_during_pour": 0.0,
    },
    "glove": {
        "tension_closed_n": 5.0,
        "force_held_n": 1.0,
        "noise_sd_n": 0.2,
    },
    "intent": {
        "container_gaze_pours": True,
    },
    "noise": {
        "pixel_sigma_px": 10.0,
        "depth_sigma_m": 0.01,
        "trial_bias_scale": 3.0,
    },
    "sample_rate_hz": 10.0,
    "scene": {
        "grid": {"origin": [0.45, 0.20, 0.40], "pitch_m": 0.13},
        "workspace": {"min": [0.05, -0.05, 0.10], "max": [1.10, 0.75, 1.20]},
        "objects": [
            {"id": "table", "label": "table"},
            {"id": "apple", "label": "apple", "grid_cell": 0},
            {"id": "cup", "label": "cup", "grid_cell": 2},
            {"id": "bowl", "label": "bowl", "grid_cell": 6},
        ],
        "drop_target_cell": 8,
    },
}

# key -> nested schema dict, or None for a leaf; "scene" is validated by the
# scene loader instead
_SCHEMA: dict = {
    "camera": {"width_px": None, "height_px": None, "fov_h_deg": None, "fov_v_deg": None},
    "head_pose": {"eye": None, "target": None, "up": None},
    "world_to_robot": {"rotation": None, "translation": None},
    "robot": {
        "home": None,
        "reach_speed_mps": None,
        "grasp_radius_m": None,
        "wrist_offset": None,
        "p_grasp_fail": None,
        "p_slip_during_pour": None,
    },
    "glove": {"tension_closed_n": None, "force_held_n": None, "noise_sd_n": None},
    "intent": {"container_gaze_pours": None},
    "noise": {"pixel_sigma_px": None, "depth_sigma_m": None, "trial_bias_scale": None},
    "sample_rate_hz": None,
    "scene": "opaque",
    "scene_path": None,
}


@dataclass(frozen=True)
class NoiseModel:
    """Synthetic gaze-sensor noise.

    Per-sample jitter is white; on top of it each trial draws a constant
    bias at `trial_bias_scale` times the jitter sigma, modelling the
    calibration drift that sample averaging cannot remove.
    """

    pixel_sigma_px: float = 10.0
    depth_sigma_m: float = 0.01
    trial_bias_scale: float = 3.0

    def __post_init__(self) -> None:
        if self.pixel_sigma_px < 0 or self.depth_sigma_m < 0 or self.trial_bias_scale < 0:
            raise ConfigError("noise parameters must be non-negative")


@dataclass(frozen=True)
class AppConfig:
    camera: CameraModel
    head_pose: RigidTransform
    world_to_robot: RigidTransform
    robot: RobotConfig
    glove: GloveThresholds
    glove_noise_sd_n: float
    container_gaze_pours: bool
    noise: NoiseModel
    sample_rate_hz: float
    scene: Scene
    doc: dict

    def to_json(self) -> str:
        return json.dumps(self.doc, indent=2, sort_keys=True)


def _reject_unknown(user: dict, schema: dict, path: str) -> None:
    for key, value in user.items():
        where = f"{path}.{key}" if path else key
        if key not in schema:
            raise ConfigError(f"unknown config key '{where}'")
        sub = schema[key]
        if isinstance(sub, dict):
            if not isinstance(value, dict):
                raise ConfigError(f"config key '{where}' must be an object")
            _reject_unknown(value, sub, where)


def _merge(base: dict, over: dict) -> dict:
    out = copy.deepcopy(base)
    for key, value in over.items():
        if key == "scene" or not isinstance(value, dict) or not isinstance(out.get(key), dict):
            out[key] = copy.deepcopy(value)
        else:
            out[key] = _merge(out[key], value)
    return out


def _vec3(doc: dict, path: str) -> np.ndarray:
    raw = doc
    try:
        v = np.asarray(raw, dtype=np.float64).reshape(3)
    except (TypeError, ValueError) as exc:
        raise ConfigError(f"config key '{path}' must be a 3-vector: {exc}") from exc
    if not np.isfinite(v).all():
        raise ConfigError(f"config key '{path}' must be finite")
    return v


def _positive(doc: dict, section: str, key: str) -> float:
    try:
        v = float(doc[section][key])
    except (TypeError, ValueError) as exc:
        raise ConfigError(f"config key '{section}.{key}' must be a number") from exc
    if not math.isfinite(v) or v <= 0:
        raise ConfigError(f"config key '{section}.{key}' must be positive")
    return v


def config_from_dict(user: dict) -> AppConfig:
    """Validate a parsed config document and build the typed bundle."""
    if not isinstance(user, dict):
        raise ConfigError("config document must be a JSON object")
    _reject_unknown(user, _SCHEMA, "")
    if "scene" in user and "scene_path" in user:
        raise ConfigError("config keys 'scene' and 'scene_path' are mutually exclusive")

    doc = _merge(DEFAULT_CONFIG, user)

    cam_doc = doc["camera"]
    try:
        width = int(cam_doc["width_px"])
        height = int(cam_doc["height_px"])
        fov_h = float(cam_doc["fov_h_deg"])
        fov_v = float(cam_doc["fov_v_deg"])
    except (TypeError, ValueError) as exc:
        raise ConfigError(f"malformed camera section: {exc}") from exc
    if not 0.0 < fov_h < 180.0 or not 0.0 < fov_v < 180.0:
        raise ConfigError("config keys 'camera.fov_*_deg' must lie in (0, 180)")
    camera = CameraModel(width, height, math.radians(fov_h) / 2.0, math.radians(fov_v) / 2.0)

    hp = doc["head_pose"]
    head_pose = look_at(
        _vec3(hp["eye"], "head_pose.eye"),
        _vec3(hp["target"], "head_pose.target"),
        _vec3(hp["up"], "head_pose.up"),
        from_frame=CAMERA,
        to_frame=WORLD,
    )

    w2r = doc["world_to_robot"]
    try:
        rotation = np.asarray(w2r["rotation"], dtype=np.float64).reshape(3, 3)
    except (TypeError, ValueError) as exc:
        raise ConfigError(f"config key 'world_to_robot.rotation' malformed: {exc}") from exc
    world_to_robot = RigidTransform(
        rotation, _vec3(w2r["translation"], "world_to_robot.translation"), WORLD, ROBOT
    )

    rb = doc["robot"]
    for p_key in ("p_grasp_fail", "p_slip_during_pour"):
        try:
            p = float(rb[p_key])
        except (TypeError, ValueError) as exc:
            raise ConfigError(f"config key 'robot.{p_key}' must be a number") from exc
        if not 0.0 <= p <= 1.0:
            raise ConfigError(f"config key 'robot.{p_key}' must lie in [0, 1]")
    home = _vec3(rb["home"], "robot.home")
    robot = RobotConfig(
        home=(home[0], home[1], home[2]),
        reach_speed_mps=_positive(doc, "robot", "reach_speed_mps"),
        grasp_radius_m=_positive(doc, "robot", "grasp_radius_m"),
        wrist_offset=WristOffset(_vec3(rb["wrist_offset"], "robot.wrist_offset")),
        p_grasp_fail=float(rb["p_grasp_fail"]),
        p_slip_during_pour=float(rb["p_slip_during_pour"]),
    )

    glove = GloveThresholds(
        tension_closed_n=_positive(doc, "glove", "tension_closed_n"),
        force_held_n=_positive(doc, "glove", "force_held_n"),
    )
    glove_noise = float(doc["glove"]["noise_sd_n"])
    if glove_noise < 0:
        raise ConfigError("config key 'glove.noise_sd_n' must be non-negative")

    nz = doc["noise"]
    try:
        noise = NoiseModel(
            float(nz["pixel_sigma_px"]), float(nz["depth_sigma_m"]), float(nz["trial_bias_scale"])
        )
    except (TypeError, ValueError) as exc:
        raise ConfigError(f"malformed noise section: {exc}") from exc

    rate = float(doc["sample_rate_hz"])
    if rate <= 0:
        raise ConfigError("config key 'sample_rate_hz' must be positive")

    if "scene_path" in doc:
        scene_doc = json.loads(Path(doc["scene_path"]).read_text())
    else:
        scene_doc = doc["scene"]
    try:
        scene = load_scene(scene_doc)
    except SceneError as exc:
        raise ConfigError(f"invalid scene: {exc}") from exc

    return AppConfig(
        camera=camera,
        head_pose=head_pose,
        world_to_robot=world_to_robot,
        robot=robot,
        glove=glove,
        glove_noise_sd_n=glove_noise,
        container_gaze_pours=bool(doc["intent"]["container_gaze_pours"]),
        noise=noise,
        sample_rate_hz=rate,
        scene=scene,
        doc=doc,
    )


def load_config(path: str | Path | None = None) -> AppConfig:
    """Load a config file, or the built-in defaults when `path` is None."""
    if path is None:
        return config_from_dict({})
    try:
        text = Path(path).read_text()
    except OSError as exc:
        raise ConfigError(f"cannot read config file {path}: {exc}") from exc
    try:
        user = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ConfigError(f"config file {path} is not valid JSON: {exc}") from exc
    return config_from_dict(user)
