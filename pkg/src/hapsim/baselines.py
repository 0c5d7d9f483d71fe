"""Non-learned comparator policies for the evaluation protocol.

static     zero actions with the wind's effect on the platforms disabled,
           i.e. HAPS frozen at the scenario start points
nocontrol  zero actions; wind drifts the platforms freely
random     uniform actions over the whole action space
oracle     commands each HAPS toward the exact next-frame position of its
           hotspot centroid (ground-truth access, clipped to r_max); the
           upper comparator, explicitly not a learned policy
"""
from __future__ import annotations

import numpy as np

from . import mobility as mb
from .channel import wrap_pi
from .env import HapsEnv

BASELINE_NAMES = ("static", "nocontrol", "oracle", "random")


class ZeroPolicy:
    def act(self, env: HapsEnv) -> np.ndarray:
        d = env.cfg.area.num_haps
        return np.zeros((d, 2))


class RandomPolicy:
    def __init__(self, rng: np.random.Generator):
        self.rng = rng

    def act(self, env: HapsEnv) -> np.ndarray:
        d = env.cfg.area.num_haps
        ang = self.rng.uniform(-np.pi, np.pi, size=d)
        ang = np.minimum(ang, np.nextafter(np.pi, 0.0))
        dist = self.rng.uniform(0.0, env.cfg.r_max, size=d)
        return np.stack([ang, dist], axis=-1)


class OraclePolicy:
    def act(self, env: HapsEnv) -> np.ndarray:
        # exact next centroid, including any boundary bounce
        nxt = mb.step_hotspots(env.world, env.cfg.area, env.cfg.episode.dt).hotspot_xy
        delta = nxt - env.world.haps_xy
        dist = np.sqrt(np.sum(delta**2, axis=-1))
        ang = np.where(dist > 0.0, np.arctan2(delta[:, 1], delta[:, 0]), 0.0)
        ang = np.minimum(wrap_pi(ang), np.nextafter(np.pi, 0.0))
        return np.stack([ang, np.minimum(dist, env.cfg.r_max)], axis=-1)


def make_baseline(name: str, rng: np.random.Generator):
    if name == "random":
        return RandomPolicy(rng)
    if name == "oracle":
        return OraclePolicy()
    if name in ("static", "nocontrol"):
        return ZeroPolicy()
    raise ValueError(f"unknown baseline {name!r}; choose from {BASELINE_NAMES}")
