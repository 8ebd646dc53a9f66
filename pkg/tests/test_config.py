"""Config loading tests: defaults, recursive merge, typo rejection by
dotted path, degree-to-radian conversion at the boundary, and the
scene/scene_path exclusivity rule."""

from __future__ import annotations

import json
import math

import numpy as np
import pytest

from gaze_grammar.config import DEFAULT_CONFIG, AppConfig, NoiseModel, config_from_dict, load_config
from gaze_grammar.errors import ConfigError


class TestDefaults:
    def test_empty_dict_gives_defaults(self):
        cfg = config_from_dict({})
        assert cfg.camera.width_px == 1280
        assert cfg.camera.height_px == 720
        assert cfg.camera.half_fov_h == pytest.approx(math.radians(69.0) / 2)
        assert cfg.camera.half_fov_v == pytest.approx(math.radians(42.0) / 2)
        assert cfg.sample_rate_hz == 10.0
        assert cfg.container_gaze_pours is True
        assert cfg.noise == NoiseModel(10.0, 0.01, 3.0)
        assert cfg.robot.p_grasp_fail == 0.0
        assert {o.id for o in cfg.scene.objects} == {"table", "apple", "cup", "bowl"}

    def test_load_config_none_is_defaults(self):
        assert load_config(None).doc == config_from_dict({}).doc

    def test_doc_reflects_merged_values(self):
        cfg = config_from_dict({"noise": {"pixel_sigma_px": 4.0}})
        assert cfg.doc["noise"]["pixel_sigma_px"] == 4.0
        assert cfg.doc["noise"]["depth_sigma_m"] == 0.01
        round_tripped = json.loads(cfg.to_json())
        assert round_tripped == cfg.doc

    def test_defaults_are_not_mutated(self):
        before = json.dumps(DEFAULT_CONFIG, sort_keys=True)
        cfg = config_from_dict({"robot": {"p_grasp_fail": 0.3}})
        cfg.doc["robot"]["p_grasp_fail"] = 0.9
        assert json.dumps(DEFAULT_CONFIG, sort_keys=True) == before


class TestMerge:
    def test_nested_sections_merge(self):
        cfg = config_from_dict({"camera": {"fov_h_deg": 90.0}})
        assert cfg.camera.half_fov_h == pytest.approx(math.pi / 4)
        # Untouched siblings keep their defaults.
        assert cfg.camera.height_px == 720

    def test_scene_replaces_wholesale(self):
        cfg = config_from_dict(
            {
                "scene": {
                    "grid": {"origin": [0.5, 0.2, 0.4], "pitch_m": 0.10},
                    "workspace": {"min": [0, 0, 0], "max": [2, 2, 2]},
                    "objects": [
                        {"id": "table", "label": "table"},
                        {"id": "only", "label": "orange", "grid_cell": 4},
                    ],
                    "drop_target_cell": 0,
                }
            }
        )
        assert {o.id for o in cfg.scene.objects} == {"table", "only"}
        assert cfg.scene.grid.pitch_m == 0.10

    def test_scalar_override(self):
        cfg = config_from_dict({"sample_rate_hz": 30.0})
        assert cfg.sample_rate_hz == 30.0


class TestRejection:
    def test_unknown_top_level_key(self):
        with pytest.raises(ConfigError, match="'spee'"):
            config_from_dict({"spee": 1})

    def test_unknown_nested_key_names_dotted_path(self):
        with pytest.raises(ConfigError, match="'robot.speed'"):
            config_from_dict({"robot": {"speed": 0.5}})

    def test_section_must_be_object(self):
        with pytest.raises(ConfigError, match="'robot' must be an object"):
            config_from_dict({"robot": 3})

    def test_scene_and_scene_path_conflict(self, tmp_path):
        scene_file = tmp_path / "scene.json"
        scene_file.write_text(json.dumps(DEFAULT_CONFIG["scene"]))
        with pytest.raises(ConfigError, match="mutually exclusive"):
            config_from_dict(
                {"scene": DEFAULT_CONFIG["scene"], "scene_path": str(scene_file)}
            )

    def test_bad_values(self):
        with pytest.raises(ConfigError):
            config_from_dict({"camera": {"fov_h_deg": 180.0}})
        with pytest.raises(ConfigError):
            config_from_dict({"camera": {"fov_v_deg": -5.0}})
        with pytest.raises(ConfigError):
            config_from_dict({"robot": {"p_grasp_fail": 1.2}})
        with pytest.raises(ConfigError):
            config_from_dict({"robot": {"reach_speed_mps": 0}})
        with pytest.raises(ConfigError):
            config_from_dict({"noise": {"pixel_sigma_px": -1.0}})
        with pytest.raises(ConfigError):
            config_from_dict({"sample_rate_hz": 0.0})
        with pytest.raises(ConfigError):
            config_from_dict({"glove": {"noise_sd_n": -0.1}})
        with pytest.raises(ConfigError):
            config_from_dict({"head_pose": {"eye": [1.0, 2.0]}})

    def test_invalid_scene_wrapped_as_config_error(self):
        bad = dict(DEFAULT_CONFIG["scene"])
        bad = json.loads(json.dumps(bad))
        bad["objects"][1]["label"] = "banana"
        with pytest.raises(ConfigError, match="invalid scene"):
            config_from_dict({"scene": bad})

    def test_non_dict_document(self):
        with pytest.raises(ConfigError):
            config_from_dict([1, 2, 3])


class TestScenePath:
    def test_scene_loaded_from_file(self, tmp_path):
        doc = json.loads(json.dumps(DEFAULT_CONFIG["scene"]))
        doc["drop_target_cell"] = 4
        p = tmp_path / "scene.json"
        p.write_text(json.dumps(doc))
        cfg = config_from_dict({"scene_path": str(p)})
        assert cfg.scene.drop_target_cell == 4


class TestFiles:
    def test_round_trip_through_file(self, tmp_path):
        p = tmp_path / "config.json"
        p.write_text(json.dumps({"noise": {"pixel_sigma_px": 2.5}}))
        cfg = load_config(p)
        assert cfg.noise.pixel_sigma_px == 2.5

    def test_missing_file(self, tmp_path):
        with pytest.raises(ConfigError, match="cannot read"):
            load_config(tmp_path / "nope.json")

    def test_invalid_json(self, tmp_path):
        p = tmp_path / "bad.json"
        p.write_text("{not json")
        with pytest.raises(ConfigError, match="not valid JSON"):
            load_config(p)


class TestTransforms:
    def test_head_pose_camera_frames(self):
        cfg = config_from_dict({})
        assert cfg.head_pose.from_frame == "camera"
        assert cfg.head_pose.to_frame == "world"
        eye = np.array(DEFAULT_CONFIG["head_pose"]["eye"])
        np.testing.assert_allclose(cfg.head_pose.translation, eye, atol=1e-12)

    def test_world_to_robot_override(self):
        cfg = config_from_dict(
            {"world_to_robot": {"translation": [0.1, 0.0, 0.0]}}
        )
        np.testing.assert_allclose(cfg.world_to_robot.translation, [0.1, 0, 0])

    def test_non_orthonormal_rotation_rejected(self):
        with pytest.raises((ConfigError, ValueError)):
            config_from_dict(
                {"world_to_robot": {"rotation": [[2, 0, 0], [0, 1, 0], [0, 0, 1]]}}
            )


class TestNoiseModel:
    def test_frozen_and_validated(self):
        with pytest.raises(ConfigError):
            NoiseModel(pixel_sigma_px=-1.0)
        with pytest.raises(ConfigError):
            NoiseModel(trial_bias_scale=-0.5)
        nm = NoiseModel()
        assert (nm.pixel_sigma_px, nm.depth_sigma_m, nm.trial_bias_scale) == (10.0, 0.01, 3.0)
