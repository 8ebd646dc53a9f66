"""Soft-glove telemetry model.

The real device reports tendon tension, a fingertip force pad, and motor
voltage.  Grasp state is recovered from two thresholded channels: tension
above `tension_closed_n` means the fingers were driven closed, and pad force
above `force_held_n` means something is resisting them.  Closed-and-empty is
the signature of a failed grasp.
"""

from __future__ import annotations

import math
import random
from dataclasses import dataclass

from .errors import SceneError


@dataclass(frozen=True)
class GloveThresholds:
    tension_closed_n: float = 5.0
    force_held_n: float = 1.0

    def __post_init__(self) -> None:
        if self.tension_closed_n <= 0 or self.force_held_n <= 0:
            raise SceneError("glove thresholds must be positive")


@dataclass(frozen=True)
class GloveTelemetry:
    tension_n: float
    force_n: float
    voltage_v: float = 0.0


@dataclass(frozen=True)
class GraspAssessment:
    closed: bool
    holding: bool

    @property
    def failed_grasp(self) -> bool:
        return self.closed and not self.holding


def assess(telemetry: GloveTelemetry, thresholds: GloveThresholds) -> GraspAssessment:
    """Threshold the two load channels; raises on non-finite readings."""
    for name, value in (("tension_n", telemetry.tension_n), ("force_n", telemetry.force_n)):
        if not math.isfinite(value):
            raise SceneError(f"glove telemetry channel {name} is not finite: {value!r}")
    return GraspAssessment(
        closed=telemetry.tension_n >= thresholds.tension_closed_n,
        holding=telemetry.force_n >= thresholds.force_held_n,
    )


# channel means by hand state: (tension N, force N)
_PROFILE = {
    ("open", False): (0.5, 0.0),
    ("closed", False): (10.0, 0.1),
    ("closed", True): (10.0, 5.0),
}


def simulate_telemetry(
    hand: str, holding: bool, rng: random.Random, noise_sd_n: float = 0.2
) -> GloveTelemetry:
    """Draw one plausible sensor frame for the given hand state."""
    if hand not in ("open", "closed"):
        raise SceneError(f"hand state must be 'open' or 'closed', got {hand!r}")
    if hand == "open" and holding:
        raise SceneError("cannot hold with an open hand")
    mean_tension, mean_force = _PROFILE[(hand, holding)]
    return GloveTelemetry(
        tension_n=max(0.0, rng.gauss(mean_tension, noise_sd_n)),
        force_n=max(0.0, rng.gauss(mean_force, noise_sd_n)),
        voltage_v=max(0.0, rng.gauss(6.0 if hand == "closed" else 0.5, noise_sd_n)),
    )
