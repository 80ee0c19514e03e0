"""Runtime configuration with JSON override via the VERBALARM_CONFIG env var."""

from __future__ import annotations

import dataclasses
import json
import os
from dataclasses import dataclass, field

ENV_VAR = "VERBALARM_CONFIG"


@dataclass
class CemConfig:
    population: int = 64
    elite_fraction: float = 0.25
    gmm_components: int = 2
    iterations: int = 5
    init_cov_scale: float = 0.25


@dataclass
class Config:
    # grasp planning
    diversity_eps: float = 0.05        # m-rad mixed metric
    diversity_angle_weight: float = 0.05  # m per rad
    menu_size: int = 5
    gripper_max_width: float = 0.10    # m
    friction_cone_deg: float = 20.0
    ransac_iterations: int = 500
    ransac_threshold: float = 0.005    # m
    cluster_tolerance: float = 0.02    # m
    cluster_min_size: int = 20
    cluster_max_size: int = 100000
    cem: CemConfig = field(default_factory=CemConfig)
    # controller default path amounts; None defers to the chain file's
    # "defaults" block, a number here overrides it
    default_cartesian_m: float | None = None
    default_joint_rad: float | None = None
    # simulation
    tick_rate: float = 50.0            # Hz
    cloud_resolution: int = 128
    cloud_noise_sigma: float = 0.001   # m
    camera_height: float = 0.9         # m above table, looking straight down
    realtime: bool = False             # pace execution ticks on the wall clock
    seed: int = 0


def _apply(obj, overrides: dict):
    for key, value in overrides.items():
        if not hasattr(obj, key):
            raise KeyError(f"unknown config key: {key!r}")
        current = getattr(obj, key)
        if dataclasses.is_dataclass(current) and isinstance(value, dict):
            _apply(current, value)
        elif current is None or value is None:
            setattr(obj, key, value)
        else:
            setattr(obj, key, type(current)(value))


def load_config(path: str | None = None) -> Config:
    """Build a Config from defaults, a JSON file, and VERBALARM_CONFIG (in that order)."""
    cfg = Config()
    env_path = os.environ.get(ENV_VAR)
    for p in (path, env_path):
        if not p:
            continue
        with open(p, "r", encoding="utf-8") as fh:
            _apply(cfg, json.load(fh))
    return cfg
