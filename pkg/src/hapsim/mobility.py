"""World geometry: hotspot bounce motion, UE disc placement, HAPS actuation.

Horizontal coordinates live in [-half_extent, half_extent]^2.  Hotspot
centroids move linearly and reflect at the boundary; the UEs of a hotspot
ride rigidly on fixed offsets inside a disc.  HAPS move horizontally by a
commanded (angle, distance) step plus wind drift and are clamped to the
service area; altitude is fixed.
"""
from __future__ import annotations

from dataclasses import dataclass, replace
from typing import Sequence

import numpy as np

# Hotspot start points and Table-style HAPS deployment presets (D = 3).
HOTSPOT_STARTS = np.array([[-550.0, -550.0], [550.0, 0.0], [-550.0, 550.0]])
SCENARIOS = {
    1: np.array([[-250.0, -450.0], [450.0, 0.0], [-250.0, 450.0]]),
    2: np.array([[-450.0, 450.0], [-100.0, 0.0], [-450.0, -450.0]]),
    3: np.array([[-450.0, 200.0], [100.0, 100.0], [-450.0, -200.0]]),
    4: np.array([[0.0, 0.0], [0.0, 0.0], [0.0, 0.0]]),
}


@dataclass
class AreaConfig:
    half_extent: float = 750.0      # m, so (x, y) in [-750, 750]^2
    haps_altitude: float = 20000.0  # m
    ue_altitude: float = 1.5        # m
    hotspot_radius: float = 50.0    # m
    ues_per_hotspot: int = 10
    hotspot_speed: float = 10.0     # m/s
    num_haps: int = 3               # D; one hotspot per HAPS

    def __post_init__(self):
        if not self.half_extent > self.hotspot_radius > 0:
            raise ValueError("need half_extent > hotspot_radius > 0")
        if self.num_haps < 1 or self.ues_per_hotspot < 1:
            raise ValueError("num_haps and ues_per_hotspot must be >= 1")

    @property
    def num_ues(self) -> int:
        return self.num_haps * self.ues_per_hotspot


@dataclass
class Action:
    """One HAPS movement command: heading from east, step length in meters."""
    angle: float     # rad, in [-pi, pi)
    distance: float  # m, in [0, r_max]


@dataclass
class WorldState:
    haps_xy: np.ndarray      # (D, 2)
    hotspot_xy: np.ndarray   # (H, 2)
    hotspot_vel: np.ndarray  # (H, 2)
    ue_offsets: np.ndarray   # (H, N, 2), fixed within an episode
    frame: int = 0


def sample_disc(rng: np.random.Generator, radius: float, n: int) -> np.ndarray:
    """n points uniform in the disc of given radius, as (n, 2)."""
    r = radius * np.sqrt(rng.uniform(0.0, 1.0, size=n))
    phi = rng.uniform(-np.pi, np.pi, size=n)
    return np.stack([r * np.cos(phi), r * np.sin(phi)], axis=-1)


def init_world(
    area: AreaConfig,
    scenario: int | str | np.ndarray,
    rng: np.random.Generator,
) -> WorldState:
    """Build the frame-0 world for a named preset, "random", or explicit HAPS xy.

    Hotspots start at the fixed launch points with left-to-right (and
    vice versa) headings; presets 1..4 are only defined for D = 3.
    """
    d = area.num_haps
    if isinstance(scenario, str):
        if scenario != "random":
            raise ValueError(f"unknown scenario {scenario!r}")
        haps_xy = rng.uniform(-area.half_extent, area.half_extent, size=(d, 2))
    elif isinstance(scenario, int):
        if scenario not in SCENARIOS:
            raise ValueError(f"unknown scenario id {scenario}")
        if d != 3:
            raise ValueError("preset scenarios are defined for num_haps == 3")
        haps_xy = SCENARIOS[scenario].copy()
    else:
        haps_xy = np.asarray(scenario, dtype=float)
        if haps_xy.shape != (d, 2):
            raise ValueError(f"scenario list must have shape ({d}, 2), got {haps_xy.shape}")
        haps_xy = haps_xy.copy()

    if d == 3:
        hotspot_xy = HOTSPOT_STARTS.copy()
    else:
        hotspot_xy = rng.uniform(
            -area.half_extent + area.hotspot_radius,
            area.half_extent - area.hotspot_radius,
            size=(d, 2),
        )
    # heading +x for hotspots launched on the left half, -x on the right
    sign = np.where(hotspot_xy[:, 0] <= 0.0, 1.0, -1.0)
    hotspot_vel = np.stack([sign * area.hotspot_speed, np.zeros(d)], axis=-1)

    ue_offsets = np.stack(
        [sample_disc(rng, area.hotspot_radius, area.ues_per_hotspot) for _ in range(d)]
    )
    return WorldState(
        haps_xy=haps_xy,
        hotspot_xy=hotspot_xy,
        hotspot_vel=hotspot_vel,
        ue_offsets=ue_offsets,
        frame=0,
    )


def _reflect(pos: float, vel: float, lo: float, hi: float) -> tuple[float, float]:
    # fold until inside; per-frame travel is small vs the area so this rarely loops
    while pos > hi or pos < lo:
        if pos > hi:
            pos = 2.0 * hi - pos
        else:
            pos = 2.0 * lo - pos
        vel = -vel
    return pos, vel


def step_hotspots(world: WorldState, area: AreaConfig, dt: float) -> WorldState:
    """Advance centroids by vel*dt with reflection at the area boundary."""
    if dt <= 0:
        raise ValueError("dt must be > 0")
    he = area.half_extent
    xy = world.hotspot_xy + world.hotspot_vel * dt
    vel = world.hotspot_vel.copy()
    for h in range(xy.shape[0]):
        for ax in range(2):
            xy[h, ax], vel[h, ax] = _reflect(xy[h, ax], vel[h, ax], -he, he)
    return replace(world, hotspot_xy=xy, hotspot_vel=vel)


def actions_to_array(actions, num_haps: int, r_max: float) -> np.ndarray:
    """Validate and convert D actions (Action objects or (D,2) array) to an array."""
    if isinstance(actions, np.ndarray):
        arr = np.asarray(actions, dtype=float)
    elif len(actions) and isinstance(actions[0], Action):
        arr = np.array([[a.angle, a.distance] for a in actions], dtype=float)
    else:
        arr = np.asarray(actions, dtype=float)
    if arr.shape != (num_haps, 2):
        raise ValueError(f"expected {num_haps} actions of (angle, distance), got shape {arr.shape}")
    ang, dist = arr[:, 0], arr[:, 1]
    if np.any(ang < -np.pi) or np.any(ang >= np.pi):
        raise ValueError("action angle out of [-pi, pi)")
    if np.any(dist < 0.0) or np.any(dist > r_max):
        raise ValueError(f"action distance out of [0, {r_max}]")
    return arr


def step_haps(
    world: WorldState,
    actions,
    wind: np.ndarray,
    area: AreaConfig,
    dt: float,
    r_max: float,
) -> WorldState:
    """Apply commanded moves plus wind drift, clamped to the service area.

    ``wind`` is (2,) for a shared field or (D, 2) per HAPS.
    """
    arr = actions_to_array(actions, area.num_haps, r_max)
    step = arr[:, 1:2] * np.stack([np.cos(arr[:, 0]), np.sin(arr[:, 0])], axis=-1)
    xy = world.haps_xy + step + np.asarray(wind, dtype=float) * dt
    xy = np.clip(xy, -area.half_extent, area.half_extent)
    return replace(world, haps_xy=xy)


def ue_positions(world: WorldState) -> np.ndarray:
    """Absolute UE horizontal positions, (H, N, 2) = centroid + rigid offset."""
    return world.hotspot_xy[:, None, :] + world.ue_offsets
