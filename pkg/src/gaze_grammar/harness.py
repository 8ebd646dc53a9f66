"""Batch evaluation harness.

Two experiments, both fully simulated and seed-deterministic:

* Gaze accuracy: a fixed head camera views targets scattered in a box in
  front of it; each target is fixated for 50 samples at the configured
  rate, the first 10 are discarded as sensor settling, and the remaining
  backprojected points are averaged into one estimate.  Error is the
  Euclidean distance to the true target.  Sensor noise has two parts:
  white per-sample jitter and a constant per-trial bias several times
  larger, standing in for calibration drift that averaging cannot remove.
  Noise draws are common random numbers: the same seed yields the same
  unit draws whatever the sigma, so error grows monotonically with sigma.

* Task protocol: a scripted ideal user drives a full `Session` through
  pick-and-place ("pp": apple to a marked grid cell) or
  pick-pour-place ("ppp": cup poured into the bowl, then parked on the
  marked cell) by fixating trigger zones exactly.  With noise and failure
  probabilities at zero every repeat must succeed; with failures enabled
  the first grasp is retried up to three times.
"""

from __future__ import annotations

import csv
import json
import math
import random
from dataclasses import dataclass, replace
from pathlib import Path

from .config import AppConfig, NoiseModel
from .errors import ConfigError, StatsError
from .geometry import (
    CAMERA,
    ROBOT,
    WORLD,
    GazePixel,
    Point3,
    RigidTransform,
    apply,
    gaze_to_robot_frame,
    invert,
    look_at,
    project_point,
)
from .scene import randomize_grid_placement, scene_to_dict
from .session import Session, SessionLog
from .stats import one_way_anova_f, spearman_rank, summarize_errors

GAZE_EVAL_EYE = (-0.35, 0.45, 0.55)
GAZE_EVAL_TARGET_BOX = ((0.25, 0.80), (0.15, 0.75), (0.35, 0.75))
GAZE_EVAL_TARGETS = 10
GAZE_EVAL_SAMPLES = 50
GAZE_EVAL_DISCARD = 10

TASKS = ("pp", "ppp")
MAX_GRASP_ATTEMPTS = 3
_FIXATE_SAMPLE_CAP = 80


def gaze_eval_camera_pose() -> RigidTransform:
    """Head camera for the accuracy protocol: eye beside the workspace,
    optical axis along +x, image up along +z."""
    eye = GAZE_EVAL_EYE
    return look_at(eye, (eye[0] + 1.0, eye[1], eye[2]), from_frame=CAMERA, to_frame=WORLD)


@dataclass(frozen=True)
class GazeTrial:
    seed: int
    target_index: int
    target: tuple[float, float, float]
    estimate: tuple[float, float, float]
    error_m: float
    mean_depth_m: float


@dataclass(frozen=True)
class GazeEvalResult:
    trials: list[GazeTrial]
    mean_error_m: float
    sd_error_m: float
    spearman_error_vs_depth: float
    anova_f_across_seeds: float | None

    def summary(self) -> dict:
        return {
            "trials": len(self.trials),
            "mean_error_m": self.mean_error_m,
            "sd_error_m": self.sd_error_m,
            "spearman_error_vs_depth": self.spearman_error_vs_depth,
            "anova_f_across_seeds": self.anova_f_across_seeds,
        }


def _clamp(v: float, lo: float, hi: float) -> float:
    return lo if v < lo else hi if v > hi else v


def run_gaze_eval(
    config: AppConfig,
    seeds: list[int],
    noise: NoiseModel | None = None,
    n_targets: int = GAZE_EVAL_TARGETS,
    out_dir: str | Path | None = None,
) -> GazeEvalResult:
    noise = config.noise if noise is None else noise
    cam = config.camera
    pose = gaze_eval_camera_pose()
    robot_to_world = invert(config.world_to_robot)
    world_to_cam = invert(pose)
    half_w = cam.width_px / 2.0
    half_h = cam.height_px / 2.0

    trials: list[GazeTrial] = []
    for seed in seeds:
        rng_targets = random.Random(f"{seed}:targets")
        rng_noise = random.Random(f"{seed}:noise")
        for idx in range(n_targets):
            (x0, x1), (y0, y1), (z0, z1) = GAZE_EVAL_TARGET_BOX
            target = Point3(
                rng_targets.uniform(x0, x1),
                rng_targets.uniform(y0, y1),
                rng_targets.uniform(z0, z1),
                ROBOT,
            )
            true_pix = project_point(apply(world_to_cam, apply(robot_to_world, target)), cam)

            bias_px = noise.trial_bias_scale * noise.pixel_sigma_px
            bias_d = noise.trial_bias_scale * noise.depth_sigma_m
            bx = bias_px * rng_noise.gauss(0.0, 1.0)
            by = bias_px * rng_noise.gauss(0.0, 1.0)
            bd = bias_d * rng_noise.gauss(0.0, 1.0)

            sx = sy = sz = 0.0
            depth_sum = 0.0
            used = 0
            for i in range(GAZE_EVAL_SAMPLES):
                px = true_pix.px + bx + noise.pixel_sigma_px * rng_noise.gauss(0.0, 1.0)
                py = true_pix.py + by + noise.pixel_sigma_px * rng_noise.gauss(0.0, 1.0)
                d = true_pix.depth_m + bd + noise.depth_sigma_m * rng_noise.gauss(0.0, 1.0)
                if i < GAZE_EVAL_DISCARD:
                    continue
                pixel = GazePixel(
                    _clamp(px, -half_w, half_w), _clamp(py, -half_h, half_h), max(d, 1e-3)
                )
                p = gaze_to_robot_frame(pixel, cam, pose, config.world_to_robot)
                sx += p.x
                sy += p.y
                sz += p.z
                depth_sum += pixel.depth_m
                used += 1
            est = (sx / used, sy / used, sz / used)
            err = math.dist(est, (target.x, target.y, target.z))
            trials.append(
                GazeTrial(
                    seed, idx, (target.x, target.y, target.z), est, err, depth_sum / used
                )
            )

    errors = [t.error_m for t in trials]
    summary = summarize_errors(errors)
    rho: float | None
    try:
        rho = spearman_rank([t.mean_depth_m for t in trials], errors)
    except StatsError:
        rho = None
    anova_f: float | None = None
    if len(seeds) >= 2:
        groups = [[t.error_m for t in trials if t.seed == s] for s in seeds]
        anova_f = one_way_anova_f(groups)[0]

    result = GazeEvalResult(trials, summary.mean, summary.sd, rho, anova_f)
    if out_dir is not None:
        _write_gaze_eval(result, Path(out_dir))
    return result


def _write_gaze_eval(result: GazeEvalResult, out_dir: Path) -> None:
    out_dir.mkdir(parents=True, exist_ok=True)
    with open(out_dir / "trials.csv", "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(
            ["seed", "target_index", "tx", "ty", "tz", "ex", "ey", "ez", "error_m", "mean_depth_m"]
        )
        for t in result.trials:
            writer.writerow(
                [t.seed, t.target_index, *t.target, *t.estimate, t.error_m, t.mean_depth_m]
            )
    (out_dir / "summary.json").write_text(json.dumps(result.summary(), indent=2) + "\n")


# -- task protocol ----------------------------------------------------------

@dataclass(frozen=True)
class TaskTrial:
    repeat: int
    task: str
    success: bool
    grasp_attempts: int
    sim_duration_s: float
    n_events: int
    failure_mode: str | None


@dataclass(frozen=True)
class TaskEvalResult:
    task: str
    trials: list[TaskTrial]

    @property
    def success_rate(self) -> float:
        return sum(t.success for t in self.trials) / len(self.trials)

    def summary(self) -> dict:
        return {
            "task": self.task,
            "repeats": len(self.trials),
            "success_rate": self.success_rate,
            "mean_sim_duration_s": sum(t.sim_duration_s for t in self.trials) / len(self.trials),
            "failure_modes": sorted({t.failure_mode for t in self.trials if t.failure_mode}),
        }


class _IdealUser:
    """Scripted gaze source that fixates exact trigger-zone centres and
    waits out robot motion by streaming background samples."""

    def __init__(self, session: Session):
        self.session = session
        self._off_scene = (-session.camera.width_px / 2.0 + 1.0, session.camera.height_px / 2.0 - 1.0)

    def _send(self, px: float, py: float) -> list[dict]:
        return self.session.gaze(px, py)

    def wait_idle(self) -> None:
        guard = 0
        while self.session.t_sim < self.session.busy_until_sim:
            self._send(*self._off_scene)
            guard += 1
            if guard > 10_000:
                raise ConfigError("robot busy time failed to elapse")

    def fixate_object(self, object_id: str) -> bool:
        """Stare at the object's trigger zone until the grammar reacts."""
        for _ in range(_FIXATE_SAMPLE_CAP):
            box = next((b for b in self.session.bboxes() if b.object_id == object_id), None)
            if box is None:
                return False
            cx, cy = box.trigger_region.center
            events = self._send(cx, cy)
            if any(e["kind"] == "fsm_transition" for e in events):
                return True
        return False

    def fixate_point(self, p: Point3) -> bool:
        """Stare at a 3D spot (e.g. the marked drop cell) until the grammar
        reacts; the spot must be visible and classify to the table."""
        pix = self.session.project_to_pixels(p)
        for _ in range(_FIXATE_SAMPLE_CAP):
            events = self._send(pix.px, pix.py)
            if any(e["kind"] == "fsm_transition" for e in events):
                return True
        return False


def _drop_cell_point(session: Session) -> Point3:
    cell = session.scene.drop_target_cell
    if cell is None:
        raise ConfigError("scene has no drop_target_cell; task protocol needs one")
    cx, cy, _ = session.scene.grid.cell_center(cell)
    table = session.scene.table()
    if table is None:
        raise ConfigError("scene has no table; task protocol needs one")
    return Point3(cx, cy, table.top_z(), ROBOT)


def _require_objects(session: Session, ids: list[str]) -> None:
    for oid in ids:
        session.scene.get(oid)


def _run_single_task(session: Session, task: str, repeat: int) -> TaskTrial:
    user = _IdealUser(session)
    attempts = 0
    failure: str | None = None

    pick_id = "apple" if task == "pp" else "cup"
    _require_objects(session, [pick_id, "table"] + (["bowl"] if task == "ppp" else []))

    # Phase 1: grasp, with retries for seeded slips.
    while attempts < MAX_GRASP_ATTEMPTS:
        attempts += 1
        if not user.fixate_object(pick_id):
            failure = "dwell_timeout"
            break
        user.wait_idle()
        if session.robot.held_object_id == pick_id:
            break
    else:
        failure = "grasp_failed"

    # Phase 2 (ppp only): pour into the bowl.
    if failure is None and task == "ppp":
        if not user.fixate_object("bowl"):
            failure = "dwell_timeout"
        else:
            user.wait_idle()
            if "bowl" not in session.scene.poured_into:
                failure = "pour_failed"

    # Final phase: park the held object on the marked cell.
    if failure is None:
        if not user.fixate_point(_drop_cell_point(session)):
            failure = "dwell_timeout"
        else:
            user.wait_idle()

    moved = session.scene.get(pick_id)
    placed = moved.grid_cell == session.scene.drop_target_cell
    poured = task != "ppp" or "bowl" in session.scene.poured_into
    success = failure is None and placed and poured and session.robot.held_object_id is None
    if failure is None and not success:
        failure = "misplaced" if not placed else "not_poured"

    duration = max(session.t_sim, session.busy_until_sim)
    session.emit_task_result(
        {
            "task": task,
            "repeat": repeat,
            "success": success,
            "grasp_attempts": attempts,
            "failure_mode": failure,
            "sim_duration_s": round(duration, 6),
        }
    )
    return TaskTrial(repeat, task, success, attempts, duration, len(session.events), failure)


def run_task_eval(
    config: AppConfig,
    task: str,
    repeats: int,
    base_seed: int = 0,
    out_dir: str | Path | None = None,
) -> TaskEvalResult:
    if task not in TASKS:
        raise ConfigError(f"unknown task {task!r}; expected one of {TASKS}")
    if repeats < 1:
        raise ConfigError("repeats must be at least 1")
    log: SessionLog | None = None
    out_path = Path(out_dir) if out_dir is not None else None
    if out_path is not None:
        out_path.mkdir(parents=True, exist_ok=True)

    trials: list[TaskTrial] = []
    for repeat in range(repeats):
        layout_seed = base_seed * 10_000 + repeat
        scene = randomize_grid_placement(config.scene, layout_seed)
        # Keep the config document honest so a recorded session replays
        # against the same randomized layout.
        doc = dict(config.doc)
        doc.pop("scene_path", None)
        doc["scene"] = scene_to_dict(scene)
        cfg = replace(config, scene=scene, doc=doc)
        if out_path is not None and repeat == 0:
            log = SessionLog(out_path / "events.ndjson")
        session = Session(cfg, seed=layout_seed, log=log if repeat == 0 else None)
        try:
            trials.append(_run_single_task(session, task, repeat))
        finally:
            if repeat == 0 and log is not None:
                session.close()

    result = TaskEvalResult(task, trials)
    if out_path is not None:
        with open(out_path / "trials.csv", "w", newline="") as fh:
            writer = csv.writer(fh)
            writer.writerow(
                ["repeat", "task", "success", "grasp_attempts", "sim_duration_s", "n_events", "failure_mode"]
            )
            for t in trials:
                writer.writerow(
                    [t.repeat, t.task, int(t.success), t.grasp_attempts, t.sim_duration_s, t.n_events, t.failure_mode or ""]
                )
        (out_path / "summary.json").write_text(json.dumps(result.summary(), indent=2) + "\n")
    return result
