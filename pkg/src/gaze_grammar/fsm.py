"""Action grammar over gaze intents and glove telemetry.

The controller is a four-state machine keyed to what the hand is doing:

* ``OPEN_EMPTY`` (wire code S001): hand open, nothing held; a dwell on a
  graspable object starts a reach-and-grasp.
* ``HOLDING_ITEM`` (S110): a non-pourable item is in hand; a dwell on the
  table or a container places it.
* ``HOLDING_POURABLE`` (S111): a pourable vessel is in hand; a container
  dwell pours into it, a table dwell puts the vessel down.
* ``CLOSED_EMPTY`` (S101): the glove reports fingers closed on nothing, the
  signature of a failed or lost grasp; the next step always opens the hand
  and returns to ``OPEN_EMPTY``.

Grasp-failure detection outranks intent, so a lost object is recovered
within two steps no matter where the user is looking.  Every emitted action
is checked against the grammar (`grammar_check`) before it leaves this
module; a violation raises instead of reaching the robot.
"""

from __future__ import annotations

from dataclasses import dataclass
from enum import Enum

from .errors import GrammarViolationError
from .geometry import Point3
from .glove import GraspAssessment
from .scene import TABLE_GP, GPBits

CONTAINER_GP = GPBits(False, False)


class FsmState(str, Enum):
    OPEN_EMPTY = "S001"
    CLOSED_EMPTY = "S101"
    HOLDING_ITEM = "S110"
    HOLDING_POURABLE = "S111"


ALL_STATES = tuple(FsmState)


class ActionKind(str, Enum):
    REACH = "Reach"
    GRASP = "Grasp"
    DROP = "Drop"
    POUR = "Pour"
    RELEASE = "Release"


@dataclass(frozen=True)
class RobotAction:
    kind: ActionKind
    object_id: str | None = None
    target: Point3 | None = None


@dataclass(frozen=True)
class TransitionInput:
    """Everything one step may consult.

    `target_position` is the point the arm should reach for the intent
    target: the object centre for graspables, a point above the rim for a
    container, the designated spot itself for the table.  `reachable` folds
    in workspace membership and motion planability, computed by the caller.
    """

    glove: GraspAssessment
    intent_gp: GPBits | None = None
    intent_object_id: str | None = None
    intent_point: Point3 | None = None
    target_position: Point3 | None = None
    reachable: bool = True


@dataclass(frozen=True)
class TransitionResult:
    next_state: FsmState
    actions: tuple[RobotAction, ...]
    reason: str


def held_gp(state: FsmState) -> GPBits | None:
    """Capability bits of whatever the state says is in hand."""
    if state is FsmState.HOLDING_ITEM:
        return GPBits(True, False)
    if state is FsmState.HOLDING_POURABLE:
        return GPBits(True, True)
    return None


def grammar_check(
    action: ActionKind, held: GPBits | None, target: GPBits | None
) -> bool:
    """True when the action is legal given what is held and what is gazed.

    Reach is always legal.  Grasp needs an empty hand and a graspable
    target.  Drop needs a full hand and a non-graspable target (table or
    container).  Pour needs a pourable vessel in hand and a container
    target.  Release needs an empty hand (it is the failed-grasp reset).
    """
    if action is ActionKind.REACH:
        return True
    if action is ActionKind.GRASP:
        return held is None and target is not None and target.graspable
    if action is ActionKind.DROP:
        return held is not None and target is not None and not target.graspable
    if action is ActionKind.POUR:
        return held == GPBits(True, True) and target == CONTAINER_GP
    if action is ActionKind.RELEASE:
        return held is None
    raise GrammarViolationError(f"unknown action kind {action!r}")


def _gated(
    state: FsmState,
    result: TransitionResult,
    target: GPBits | None,
) -> TransitionResult:
    held = held_gp(state)
    for action in result.actions:
        if not grammar_check(action.kind, held, target):
            raise GrammarViolationError(
                f"{action.kind.value} is not allowed in {state.value} "
                f"(held={held.code if held else None}, "
                f"target={target.code if target else None})"
            )
    return result


def step(
    state: FsmState,
    inp: TransitionInput,
    *,
    container_gaze_pours: bool = True,
) -> TransitionResult:
    """Advance the grammar one decision step.

    Priority order: recover from a detected grasp failure, then ignore the
    step when there is no intent or the target is unreachable, then dispatch
    on the target's capability bits.  `container_gaze_pours` selects what a
    container dwell means while holding a pourable: pour into it (default)
    or set the vessel down inside it.
    """
    if state is FsmState.CLOSED_EMPTY:
        return _gated(
            FsmState.OPEN_EMPTY,
            TransitionResult(
                FsmState.OPEN_EMPTY,
                (RobotAction(ActionKind.RELEASE),),
                "release_after_failed_grasp",
            ),
            None,
        )

    if state in (FsmState.HOLDING_ITEM, FsmState.HOLDING_POURABLE):
        if inp.glove.failed_grasp:
            return TransitionResult(FsmState.CLOSED_EMPTY, (), "grasp_failure_detected")

    if inp.intent_gp is None:
        return TransitionResult(state, (), "no_intent")
    if not inp.reachable:
        return TransitionResult(state, (), "target_unreachable")

    gp = inp.intent_gp
    reach = RobotAction(ActionKind.REACH, inp.intent_object_id, inp.target_position)

    if state is FsmState.OPEN_EMPTY:
        if gp.graspable:
            nxt = FsmState.HOLDING_POURABLE if gp.pourable else FsmState.HOLDING_ITEM
            actions = (reach, RobotAction(ActionKind.GRASP, inp.intent_object_id))
            return _gated(state, TransitionResult(nxt, actions, "grasp"), gp)
        return TransitionResult(state, (), "ignored")

    if state is FsmState.HOLDING_ITEM:
        if gp in (TABLE_GP, CONTAINER_GP):
            actions = (reach, RobotAction(ActionKind.DROP, inp.intent_object_id))
            reason = "drop" if gp == TABLE_GP else "drop_into_container"
            return _gated(state, TransitionResult(FsmState.OPEN_EMPTY, actions, reason), gp)
        return TransitionResult(state, (), "ignored")

    if state is FsmState.HOLDING_POURABLE:
        if gp == CONTAINER_GP:
            if container_gaze_pours:
                actions = (reach, RobotAction(ActionKind.POUR, inp.intent_object_id))
                return _gated(state, TransitionResult(state, actions, "pour"), gp)
            actions = (reach, RobotAction(ActionKind.DROP, inp.intent_object_id))
            return _gated(
                state,
                TransitionResult(FsmState.OPEN_EMPTY, actions, "drop_into_container"),
                gp,
            )
        if gp == TABLE_GP:
            actions = (reach, RobotAction(ActionKind.DROP, inp.intent_object_id))
            return _gated(state, TransitionResult(FsmState.OPEN_EMPTY, actions, "drop"), gp)
        return TransitionResult(state, (), "ignored")

    raise GrammarViolationError(f"unhandled state {state!r}")
