"""Dwell decoding tests.

The firing rule is checked against a brute-force oracle: over any sample
string, the decoder must fire exactly once per maximal run of 15 or more
consecutive identical object ids, at the 15th sample of that run.  The
oracle scans runs directly; the decoder is driven sample by sample.
"""

from __future__ import annotations

import random

import numpy as np
import pytest

from gaze_grammar.geometry import CAMERA, ROBOT, WORLD, CameraModel, GazePixel, Point3, identity_transform, look_at
from gaze_grammar.intent import (
    DWELL_SAMPLES,
    DwellState,
    classify_gaze,
    decode,
    update_dwell,
)
from gaze_grammar.scene import EgoBBox, Rect


def run_decoder(symbols: list[str | None]) -> list[int]:
    """Feed a symbol string through the dwell decoder; returns the indices
    where an intent fired."""
    state = DwellState.idle()
    fired_at = []
    for i, sym in enumerate(symbols):
        point = Point3(1.0, 2.0, 3.0, ROBOT) if sym is not None else None
        state, fired = update_dwell(state, sym, point)
        if fired is not None:
            fired_at.append(i)
    return fired_at


def oracle_fires(symbols: list[str | None]) -> list[int]:
    """Independent run-length scan: one fire at the 15th sample of every
    maximal run of the same non-None symbol with length >= 15."""
    fires = []
    i = 0
    n = len(symbols)
    while i < n:
        if symbols[i] is None:
            i += 1
            continue
        j = i
        while j < n and symbols[j] == symbols[i]:
            j += 1
        if j - i >= DWELL_SAMPLES:
            fires.append(i + DWELL_SAMPLES - 1)
        i = j
    return fires


class TestDwellOracle:
    def test_exactly_threshold_fires_once(self):
        assert run_decoder(["a"] * 15) == [14]

    def test_one_short_never_fires(self):
        assert run_decoder(["a"] * 14) == []

    def test_long_stare_fires_once(self):
        assert run_decoder(["a"] * 40) == [14]

    def test_gap_rearms(self):
        symbols = ["a"] * 15 + [None] + ["a"] * 15
        assert run_decoder(symbols) == [14, 30]

    def test_object_switch_rearms(self):
        symbols = ["a"] * 15 + ["b"] * 15
        assert run_decoder(symbols) == [14, 29]

    def test_interruption_resets_count(self):
        symbols = ["a"] * 14 + ["b"] + ["a"] * 15
        assert run_decoder(symbols) == [29]

    def test_none_resets_count(self):
        symbols = ["a"] * 14 + [None] + ["a"] * 14
        assert run_decoder(symbols) == []

    def test_random_strings_match_oracle(self):
        # Sticky-biased random strings so threshold-length runs occur often.
        rng = random.Random(1234)
        alphabet = ["a", "b", "c", None]
        for _ in range(20_000):
            length = rng.randrange(0, 60)
            symbols: list[str | None] = []
            for i in range(length):
                if symbols and rng.random() < 0.85:
                    symbols.append(symbols[-1])
                else:
                    symbols.append(rng.choice(alphabet))
            assert run_decoder(symbols) == oracle_fires(symbols)


class TestIntentPayload:
    def test_intent_point_is_mean_of_run(self):
        state = DwellState.idle()
        fired = None
        for i in range(15):
            p = Point3(float(i), 2.0 * i, 0.5, ROBOT)
            state, fired = update_dwell(state, "cup", p)
        assert fired is not None
        assert fired.object_id == "cup"
        assert fired.sample_count == 15
        assert fired.point.x == pytest.approx(7.0)     # mean of 0..14
        assert fired.point.y == pytest.approx(14.0)
        assert fired.point.z == pytest.approx(0.5)
        assert fired.point.frame == ROBOT

    def test_inhibited_until_broken(self):
        state = DwellState.idle()
        for _ in range(15):
            state, _ = update_dwell(state, "cup", Point3(0.0, 0.0, 0.0, ROBOT))
        assert state.inhibited
        state, fired = update_dwell(state, "cup", Point3(0.0, 0.0, 0.0, ROBOT))
        assert fired is None and state.inhibited
        state, _ = update_dwell(state, None)
        assert state == DwellState.idle()


def box(object_id: str, left: float, right: float, bottom: float, top: float,
        trigger: Rect | None = None, surface: bool = False) -> EgoBBox:
    if trigger is None:
        trigger = Rect(right, right + 40.0, bottom, top)
    return EgoBBox(object_id, left, right, bottom, top, trigger, surface)


class TestClassifyGaze:
    TABLE = box("table", -300.0, 300.0, -200.0, 100.0,
                trigger=Rect(-300.0, 300.0, -200.0, 100.0), surface=True)
    CUP = box("cup", -50.0, 0.0, -50.0, 50.0)
    APPLE = box("apple", 100.0, 150.0, -50.0, 50.0)

    def test_trigger_zone_hit(self):
        assert classify_gaze(20.0, 0.0, [self.TABLE, self.CUP, self.APPLE]) == "cup"

    def test_body_is_neutral_and_masks_surface(self):
        assert classify_gaze(-25.0, 0.0, [self.TABLE, self.CUP, self.APPLE]) is None

    def test_surface_checked_last(self):
        assert classify_gaze(-200.0, -100.0, [self.TABLE, self.CUP, self.APPLE]) == "table"

    def test_outside_everything(self):
        assert classify_gaze(500.0, 300.0, [self.TABLE, self.CUP, self.APPLE]) is None

    def test_overlapping_triggers_resolve_to_nearest_center(self):
        a = box("a", 0.0, 10.0, -50.0, 50.0, trigger=Rect(10.0, 100.0, -50.0, 50.0))
        b = box("b", 0.0, 10.0, -50.0, 50.0, trigger=Rect(60.0, 160.0, -50.0, 50.0))
        # a's zone centre is 55, b's is 110; a pixel at 70 is inside both
        assert classify_gaze(70.0, 0.0, [a, b]) == "a"
        assert classify_gaze(100.0, 0.0, [a, b]) == "b"

    def test_trigger_beats_body(self):
        # apple's body overlaps cup's trigger zone in image space
        apple = box("apple", 10.0, 60.0, -50.0, 50.0)
        assert classify_gaze(20.0, 0.0, [self.CUP, apple]) == "cup"


class TestDecode:
    CAM = CameraModel()
    HEAD = identity_transform(CAMERA, WORLD)
    W2R = identity_transform(WORLD, ROBOT)

    def test_invalid_depth_resets_instead_of_raising(self):
        state = DwellState(object_id="cup", count=7, inhibited=False)
        boxes = [box("cup", -50.0, 0.0, -50.0, 50.0)]
        state, fired, oid, point = decode(
            state, GazePixel(20.0, 0.0, -1.0), self.CAM, self.HEAD, self.W2R, boxes
        )
        assert state == DwellState.idle()
        assert fired is None and oid is None and point is None

    def test_out_of_view_pixel_resets(self):
        state = DwellState(object_id="cup", count=7, inhibited=False)
        state, fired, oid, point = decode(
            state, GazePixel(2000.0, 0.0, 1.0), self.CAM, self.HEAD, self.W2R, []
        )
        assert state == DwellState.idle() and point is None

    def test_full_pipeline_fires_with_robot_frame_point(self):
        boxes = [box("cup", -50.0, 0.0, -50.0, 50.0)]
        state = DwellState.idle()
        fired = None
        for _ in range(15):
            state, fired, oid, point = decode(
                state, GazePixel(20.0, 10.0, 1.0), self.CAM, self.HEAD, self.W2R, boxes
            )
            assert oid == "cup"
        assert fired is not None
        assert fired.point.frame == ROBOT
        # identity chain: the intent point is the backprojected pixel
        assert np.linalg.norm(
            fired.point.as_array()
        ) == pytest.approx(1.0, rel=1e-12)
