"""Scene model tests: taxonomy enforcement, grid placement, bbox
projection against a corner oracle, workspace membership, and ray-cast
depth."""

from __future__ import annotations

import math
import random

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from gaze_grammar.errors import FrameMismatchError, SceneError
from gaze_grammar.geometry import CAMERA, ROBOT, WORLD, CameraModel, Point3, identity_transform, look_at
from gaze_grammar.scene import (
    GRID_CELLS,
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
    scene_to_dict,
)

CAM = CameraModel()


def minimal_doc(**overrides) -> dict:
    doc = {
        "grid": {"origin": [0.45, 0.20, 0.40], "pitch_m": 0.13},
        "workspace": {"min": [0.05, -0.05, 0.10], "max": [1.10, 0.75, 1.20]},
        "objects": [
            {"id": "table", "label": "table"},
            {"id": "apple", "label": "apple", "grid_cell": 0},
            {"id": "cup", "label": "cup", "grid_cell": 2},
            {"id": "bowl", "label": "bowl", "grid_cell": 6},
        ],
        "drop_target_cell": 8,
    }
    doc.update(overrides)
    return doc


class TestGPBits:
    def test_taxonomy_codes(self):
        assert GPBits(True, False).code == "10"   # plain graspable (apple)
        assert GPBits(True, True).code == "11"    # graspable and pourable (cup)
        assert GPBits(False, False).code == "00"  # container (bowl)
        assert GPBits(False, True).code == "01"   # the table surface

    def test_round_trip(self):
        for code in ("00", "01", "10", "11"):
            assert GPBits.from_code(code).code == code

    def test_rejects_garbage(self):
        with pytest.raises(SceneError):
            GPBits.from_code("2")


class TestLoadScene:
    def test_labels_resolve_gp(self):
        scene = load_scene(minimal_doc())
        assert scene.get("apple").gp.code == "10"
        assert scene.get("cup").gp.code == "11"
        assert scene.get("bowl").gp.code == "00"
        assert scene.get("table").gp.code == "01"
        assert scene.get("table").is_surface

    def test_grid_cell_positions(self):
        scene = load_scene(minimal_doc())
        apple = scene.get("apple")
        # cell 0 is the grid origin; the object rests on the cell plane, so
        # its centre sits one half-height above it.
        assert apple.position.x == pytest.approx(0.45)
        assert apple.position.y == pytest.approx(0.20)
        assert apple.position.z == pytest.approx(0.40 + apple.extents[2])

    def test_table_gp_reserved(self):
        doc = minimal_doc()
        doc["objects"].append({"id": "fake", "label": "apple", "gp": "01"})
        with pytest.raises(SceneError, match="reserved"):
            load_scene(doc)

    def test_gp_must_match_taxonomy(self):
        doc = minimal_doc()
        doc["objects"][1] = {"id": "apple", "label": "apple", "gp": "11", "grid_cell": 0}
        with pytest.raises(SceneError, match="contradicts"):
            load_scene(doc)

    def test_duplicate_ids_rejected(self):
        doc = minimal_doc()
        doc["objects"].append({"id": "apple", "label": "apple", "grid_cell": 1})
        with pytest.raises(SceneError, match="duplicate"):
            load_scene(doc)

    def test_unknown_label_needs_explicit_gp(self):
        doc = minimal_doc()
        doc["objects"].append({"id": "thing", "label": "widget", "grid_cell": 1})
        with pytest.raises(SceneError, match="unknown label"):
            load_scene(doc)
        doc["objects"][-1]["gp"] = "10"
        scene = load_scene(doc)
        assert scene.get("thing").gp.code == "10"

    def test_missing_sections_rejected(self):
        with pytest.raises(SceneError, match="grid"):
            load_scene({"objects": [], "workspace": {"min": [0, 0, 0], "max": [1, 1, 1]}})

    def test_round_trip_through_dict(self):
        scene = load_scene(minimal_doc())
        again = load_scene(scene_to_dict(scene))
        for obj in scene.objects:
            twin = again.get(obj.id)
            assert np.allclose(obj.position.as_array(), twin.position.as_array())
            assert obj.gp == twin.gp
            assert obj.grid_cell == twin.grid_cell
        assert again.drop_target_cell == scene.drop_target_cell


class TestGrid:
    def test_cell_centers_row_major(self):
        grid = Grid(np.array([0.45, 0.20, 0.40]), 0.13)
        assert np.allclose(grid.cell_center(0), [0.45, 0.20, 0.40])
        assert np.allclose(grid.cell_center(2), [0.71, 0.20, 0.40])
        assert np.allclose(grid.cell_center(4), [0.58, 0.33, 0.40])
        assert np.allclose(grid.cell_center(8), [0.71, 0.46, 0.40])

    def test_cell_of_inverts_center(self):
        grid = Grid(np.array([0.45, 0.20, 0.40]), 0.13)
        for cell in range(GRID_CELLS):
            cx, cy, _ = grid.cell_center(cell)
            assert grid.cell_of(cx, cy) == cell
            # anywhere within half a pitch of the centre snaps to the cell
            assert grid.cell_of(cx + 0.06, cy - 0.06) == cell

    def test_cell_of_off_grid(self):
        grid = Grid(np.array([0.45, 0.20, 0.40]), 0.13)
        assert grid.cell_of(0.0, 0.0) is None
        assert grid.cell_of(2.0, 0.33) is None


class TestRandomizePlacement:
    def test_distinct_cells_and_determinism(self):
        scene = load_scene(minimal_doc())
        a = randomize_grid_placement(scene, 42)
        b = randomize_grid_placement(scene, 42)
        cells = [o.grid_cell for o in a.movable_objects()]
        assert len(set(cells)) == len(cells)
        assert a.drop_target_cell not in cells
        assert [o.grid_cell for o in b.movable_objects()] == cells
        assert b.drop_target_cell == a.drop_target_cell

    def test_different_seeds_differ_somewhere(self):
        scene = load_scene(minimal_doc())
        layouts = {
            tuple(o.grid_cell for o in randomize_grid_placement(scene, s).movable_objects())
            for s in range(30)
        }
        assert len(layouts) > 1

    def test_uniform_cell_coverage(self):
        scene = load_scene(minimal_doc())
        seen = set()
        for s in range(200):
            placed = randomize_grid_placement(scene, s)
            seen.update(o.grid_cell for o in placed.movable_objects())
            seen.add(placed.drop_target_cell)
        assert seen == set(range(GRID_CELLS))

    def test_too_many_objects_rejected(self):
        doc = minimal_doc()
        doc["objects"] = [{"id": "table", "label": "table"}] + [
            {"id": f"apple{i}", "label": "apple", "grid_cell": i % GRID_CELLS}
            for i in range(GRID_CELLS)
        ]
        scene = load_scene(doc)
        with pytest.raises(SceneError, match="exceed"):
            randomize_grid_placement(scene, 0)


class TestProjectBBoxes:
    def test_corner_oracle_straight_on(self):
        # Camera at the origin of an identity pose, cube centred on the
        # optical axis at z = 0.74 with half-extents 0.06.  The widest
        # projected corner is the near face: 640 * (0.06/0.68) / tan(34.5)
        # = 82.1652157 px; the vertical twin is 360 * (0.06/0.68) / tan(21)
        # = 82.7498879 px.
        obj = SceneObject(
            "cube", "widget", GPBits(True, False),
            Point3(0.0, 0.0, 0.74, CAMERA), np.array([0.06, 0.06, 0.06]),
        )
        ws = Workspace(np.array([-1.0, -1.0, -1.0]), np.array([2.0, 2.0, 2.0]))
        scene = Scene((obj,), ws, Grid(np.zeros(3), 0.13))
        pose = identity_transform(CAMERA, CAMERA)
        (box,) = project_bboxes(scene, pose, CAM)
        assert box.right == pytest.approx(82.1652157367969, abs=1e-9)
        assert box.left == pytest.approx(-82.1652157367969, abs=1e-9)
        assert box.top == pytest.approx(82.74988793733252, abs=1e-9)
        assert box.bottom == pytest.approx(-82.74988793733252, abs=1e-9)

    def test_trigger_zone_abuts_right_edge_with_floor(self):
        obj = SceneObject(
            "cube", "widget", GPBits(True, False),
            Point3(0.0, 0.0, 0.74, CAMERA), np.array([0.06, 0.06, 0.06]),
        )
        ws = Workspace(np.array([-1.0, -1.0, -1.0]), np.array([2.0, 2.0, 2.0]))
        scene = Scene((obj,), ws, Grid(np.zeros(3), 0.13))
        (box,) = project_bboxes(scene, identity_transform(CAMERA, CAMERA), CAM)
        trigger = box.trigger_region
        assert trigger.left == box.right
        # zone width is max(0.25 * bbox width, 40 px); here the bbox is
        # ~164 px wide so the proportional term wins.
        assert trigger.right - trigger.left == pytest.approx(0.25 * (box.right - box.left))
        assert trigger.bottom == box.bottom and trigger.top == box.top

    def test_small_object_gets_minimum_zone(self):
        obj = SceneObject(
            "pea", "widget", GPBits(True, False),
            Point3(0.0, 0.0, 2.0, CAMERA), np.array([0.01, 0.01, 0.01]),
        )
        ws = Workspace(np.array([-1.0, -1.0, -1.0]), np.array([3.0, 3.0, 3.0]))
        scene = Scene((obj,), ws, Grid(np.zeros(3), 0.13))
        (box,) = project_bboxes(scene, identity_transform(CAMERA, CAMERA), CAM)
        assert box.trigger_region.right - box.trigger_region.left == pytest.approx(40.0)

    def test_surface_trigger_is_own_bbox(self):
        scene = load_scene(minimal_doc())
        pose = look_at((0.13, 0.33, 1.10), (0.58, 0.33, 0.40), from_frame=CAMERA, to_frame=ROBOT)
        boxes = {b.object_id: b for b in project_bboxes(scene, pose, CAM)}
        table = boxes["table"]
        assert table.is_surface
        assert table.trigger_region.left == table.left
        assert table.trigger_region.right == table.right
        cup = boxes["cup"]
        assert not cup.is_surface
        assert cup.trigger_region.left == cup.right

    def test_held_object_not_projected(self):
        scene = load_scene(minimal_doc())
        import dataclasses

        held = dataclasses.replace(scene, held_object_id="cup")
        pose = look_at((0.13, 0.33, 1.10), (0.58, 0.33, 0.40), from_frame=CAMERA, to_frame=ROBOT)
        ids = {b.object_id for b in project_bboxes(held, pose, CAM)}
        assert "cup" not in ids and "apple" in ids

    def test_behind_camera_skipped(self):
        obj = SceneObject(
            "ghost", "widget", GPBits(True, False),
            Point3(0.0, 0.0, -1.0, CAMERA), np.array([0.05, 0.05, 0.05]),
        )
        ws = Workspace(np.array([-2.0, -2.0, -2.0]), np.array([2.0, 2.0, 2.0]))
        scene = Scene((obj,), ws, Grid(np.zeros(3), 0.13))
        assert project_bboxes(scene, identity_transform(CAMERA, CAMERA), CAM) == []


class TestWorkspace:
    WS = Workspace(np.array([0.0, 0.0, 0.0]), np.array([1.0, 1.0, 1.0]))

    def test_closed_boundaries(self):
        assert in_workspace(Point3(0.0, 0.0, 0.0, ROBOT), self.WS)
        assert in_workspace(Point3(1.0, 1.0, 1.0, ROBOT), self.WS)
        assert not in_workspace(Point3(1.0000001, 0.5, 0.5, ROBOT), self.WS)

    def test_requires_robot_frame(self):
        with pytest.raises(FrameMismatchError):
            in_workspace(Point3(0.5, 0.5, 0.5, WORLD), self.WS)

    def test_degenerate_box_rejected(self):
        with pytest.raises(SceneError):
            Workspace(np.array([0.0, 0.0, 0.0]), np.array([1.0, 0.0, 1.0]))

    @given(st.floats(0.0, 1.0), st.floats(0.0, 1.0), st.floats(0.0, 1.0),
           st.floats(0.0, 1.0), st.floats(0.0, 1.0), st.floats(0.0, 1.0))
    def test_segment_membership_is_endpoint_membership(self, x0, y0, z0, x1, y1, z1):
        # The workspace is convex, so a straight reach stays inside exactly
        # when both endpoints are inside.
        a = np.array([x0, y0, z0])
        b = np.array([x1, y1, z1])
        for t in np.linspace(0.0, 1.0, 7):
            p = a + t * (b - a)
            assert in_workspace(Point3(*p, ROBOT), self.WS)


class TestRaycastDepth:
    def test_hits_axis_aligned_cube_face(self):
        obj = SceneObject(
            "cube", "widget", GPBits(True, False),
            Point3(0.0, 0.0, 0.74, CAMERA), np.array([0.06, 0.06, 0.06]),
        )
        ws = Workspace(np.array([-1.0, -1.0, -1.0]), np.array([2.0, 2.0, 2.0]))
        scene = Scene((obj,), ws, Grid(np.zeros(3), 0.13))
        d = raycast_depth(scene, identity_transform(CAMERA, CAMERA), CAM, 0.0, 0.0)
        assert d == pytest.approx(0.68, abs=1e-12)

    def test_miss_returns_default(self):
        obj = SceneObject(
            "cube", "widget", GPBits(True, False),
            Point3(0.0, 0.0, 0.74, CAMERA), np.array([0.06, 0.06, 0.06]),
        )
        ws = Workspace(np.array([-1.0, -1.0, -1.0]), np.array([2.0, 2.0, 2.0]))
        scene = Scene((obj,), ws, Grid(np.zeros(3), 0.13))
        d = raycast_depth(scene, identity_transform(CAMERA, CAMERA), CAM, 639.0, 359.0)
        assert d == 2.0

    def test_depth_consistent_with_projection(self):
        # Fire a ray at the pixel of a known surface point and check the
        # returned range matches the Euclidean distance to that point.
        scene = load_scene(minimal_doc())
        pose = look_at((0.13, 0.33, 1.10), (0.58, 0.33, 0.40), from_frame=CAMERA, to_frame=ROBOT)
        eye = np.array([0.13, 0.33, 1.10])
        # centre of the empty drop cell on the table top
        target = np.array([0.71, 0.46, 0.40])
        rel = pose.rotation.T @ (target - eye)
        px = 640.0 * (rel[0] / rel[2]) / math.tan(math.radians(34.5))
        py = 360.0 * (rel[1] / rel[2]) / math.tan(math.radians(21.0))
        d = raycast_depth(scene, pose, CAM, px, py)
        assert d == pytest.approx(np.linalg.norm(target - eye), abs=1e-9)

    def test_nearest_object_wins(self):
        near = SceneObject(
            "near", "widget", GPBits(True, False),
            Point3(0.0, 0.0, 0.5, CAMERA), np.array([0.05, 0.05, 0.05]),
        )
        far = SceneObject(
            "far", "widget", GPBits(True, False),
            Point3(0.0, 0.0, 1.5, CAMERA), np.array([0.05, 0.05, 0.05]),
        )
        ws = Workspace(np.array([-1.0, -1.0, -1.0]), np.array([2.0, 2.0, 2.0]))
        scene = Scene((near, far), ws, Grid(np.zeros(3), 0.13))
        d = raycast_depth(scene, identity_transform(CAMERA, CAMERA), CAM, 0.0, 0.0)
        assert d == pytest.approx(0.45, abs=1e-12)


def test_scene_revision_bumps_on_mutation():
    scene = load_scene(minimal_doc())
    assert scene.revision == 0
    import dataclasses

    moved = scene.with_object(
        dataclasses.replace(scene.get("apple"), grid_cell=5,
                            position=Point3(0.58, 0.33, 0.435, ROBOT))
    )
    assert moved.revision == 1
    shuffled = randomize_grid_placement(scene, 3)
    assert shuffled.revision == 1
