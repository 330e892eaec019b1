"""Single structured configuration for the whole pipeline.

The config is a nested JSON document; any subset may be given in a file or as
overrides and is deep-merged over the defaults below.  Builders turn sections
into the typed objects the core modules take.
"""

from __future__ import annotations

import copy
import json
from pathlib import Path

from .errors import ParseError, ValidationError
from .mlp import TrainConfig
from .servo import ServoConfig
from .sim import ArmModel, CameraModel, SweepConfig, default_arm, default_camera

DEFAULT_CONFIG: dict = {
    "seed": 0,
    "arm": default_arm().to_dict(),
    "camera": {"image_size": [640, 480], "focal": 350.0, "depth": 1.5},
    "sweep": {"res": 15, "dt": 0.1, "v_max": 5.0, "frame_rate": 10.0},
    "pairs": {"max_span": None, "augment_multiple": 5,
              "identity_fraction": 0.5, "flip_direction": True},
    "train": {"learning_rate": 0.005, "batch_size": 32, "epochs": 400,
              "hidden": [64, 64], "train_fraction": 0.8},
    "roadmap": {"k": 25, "node_count": 1000, "strategy": "uniform-subsample"},
    "servo": {"gain": 1.5, "v_sat": 0.8, "window": 30,
              "eps_waypoint": 15.0, "eps_goal": 5.0,
              "excitation_amplitude": 0.02, "max_steps_per_waypoint": 400,
              "dt": 0.05, "control_damping": 1e-6, "estimator_damping": 1e-9,
              "apf_influence_radius": 60.0, "apf_repulsive_gain": 2.0e5,
              "apf_max_steps": 2000, "stall_velocity": 1e-3, "stall_steps": 40},
    "bench": {"queries": 100, "free_experiments": 16,
              "single_obstacle_experiments": 10, "multi_obstacle_experiments": 4,
              "shelf_experiments": 1, "soundness_scenes": 50},
}


def deep_merge(base: dict, override: dict) -> dict:
    out = copy.deepcopy(base)
    for key, value in override.items():
        if isinstance(value, dict) and isinstance(out.get(key), dict):
            out[key] = deep_merge(out[key], value)
        else:
            out[key] = copy.deepcopy(value)
    return out


def load_config(path: str | None = None, overrides: dict | None = None) -> dict:
    """Defaults, overlaid with an optional JSON config file, overlaid with
    explicit overrides (e.g. from CLI flags)."""
    cfg = copy.deepcopy(DEFAULT_CONFIG)
    if path is not None:
        try:
            file_cfg = json.loads(Path(path).read_text(encoding="utf-8"))
        except FileNotFoundError:
            raise
        except json.JSONDecodeError as exc:
            raise ParseError(f"{path}: {exc.msg}", byte_offset=exc.pos) from exc
        if not isinstance(file_cfg, dict):
            raise ValidationError(f"{path}: config document must be a JSON object")
        cfg = deep_merge(cfg, file_cfg)
    if overrides:
        cfg = deep_merge(cfg, overrides)
    return cfg


def build_arm(cfg: dict) -> ArmModel:
    return ArmModel.from_dict(cfg["arm"])


def build_camera(cfg: dict) -> CameraModel:
    cam = cfg["camera"]
    if "intrinsics" in cam:
        return CameraModel.from_dict(cam)
    return default_camera(tuple(cam["image_size"]), cam["focal"], cam["depth"])


def build_sweep(cfg: dict) -> SweepConfig:
    s = cfg["sweep"]
    return SweepConfig(res=int(s["res"]), dt=float(s["dt"]),
                       v_max=float(s["v_max"]), frame_rate=float(s["frame_rate"]))


def build_train(cfg: dict) -> TrainConfig:
    t = cfg["train"]
    return TrainConfig(learning_rate=float(t["learning_rate"]),
                       batch_size=int(t["batch_size"]), epochs=int(t["epochs"]),
                       shuffle_seed=int(cfg["seed"]))


def build_servo(cfg: dict) -> ServoConfig:
    return ServoConfig(**{k: v for k, v in cfg["servo"].items()})
