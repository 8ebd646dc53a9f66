"""Gaze-driven reach/grasp pipeline: 3D gaze estimation from a head camera,
dwell-based intent decoding over per-object trigger zones, a capability-bit
action grammar, and a kinematic robot simulator, plus evaluation harnesses
and a replayable session service."""

from .config import AppConfig, NoiseModel, config_from_dict, load_config
from .errors import (
    CalibrationError,
    ConfigError,
    DepthError,
    FrameMismatchError,
    GazeGrammarError,
    GrammarViolationError,
    PixelBoundsError,
    ProtocolError,
    SceneError,
    StatsError,
)
from .fsm import (
    ActionKind,
    FsmState,
    RobotAction,
    TransitionInput,
    TransitionResult,
    grammar_check,
    step,
)
from .geometry import (
    CAMERA,
    ROBOT,
    WORLD,
    CameraModel,
    GazeAngles,
    GazePixel,
    Point3,
    RigidTransform,
    WristOffset,
    apply,
    backproject,
    calibrate_wrist_offset,
    compose,
    gaze_to_robot_frame,
    identity_transform,
    invert,
    look_at,
    pixel_to_angles,
    project_point,
    solve_projections,
)
from .glove import GloveTelemetry, GloveThresholds, GraspAssessment, assess, simulate_telemetry
from .harness import GazeEvalResult, TaskEvalResult, run_gaze_eval, run_task_eval
from .intent import DWELL_SAMPLES, DwellState, Intent, classify_gaze, decode, update_dwell
from .robot import ActionOutcome, RobotConfig, RobotState, execute
from .scene import (
    EgoBBox,
    GPBits,
    Grid,
    Scene,
    SceneObject,
    Workspace,
    in_workspace,
    load_scene,
    project_bboxes,
    randomize_grid_placement,
    raycast_depth,
)
from .session import Session, SessionLog, canonical_json, replay_log
from .stats import ErrorSummary, one_way_anova_f, spearman_rank, summarize_errors

__version__ = "0.1.0"

__all__ = [name for name in dir() if not name.startswith("_")]
