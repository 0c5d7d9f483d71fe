"""Episodic RL environment tying wind, mobility and channel together.

Per frame: the wind advances, HAPS apply their commanded moves plus wind
drift, hotspots move, fading is redrawn, the downlink is evaluated, and the
log-fair throughput is squashed to a reward in (0, 1) by a sigmoid.

Observations aggregate per-hotspot radio measurements (mean effective SINR
in dB, circular mean/std of the angles of arrival) together with the HAPS
positions; the normalized vector fed to the policy encodes angles as
(sin, cos) pairs and scales every entry into [-1, 1].
"""
from __future__ import annotations

from dataclasses import dataclass, field, replace

import numpy as np
from scipy.special import expit

from . import channel as ch
from . import mobility as mb
from . import wind as wd


@dataclass
class RewardConfig:
    c_s: float = 0.25  # sigmoid slope
    c_m: float = 50.0  # fair-rate value mapped to reward 0.5

    def __post_init__(self):
        if self.c_s <= 0:
            raise ValueError("c_s must be > 0")


@dataclass
class EpisodeConfig:
    frames_per_episode: int = 128
    dt: float = 2.0  # s per frame; must match the wind config

    def __post_init__(self):
        if self.frames_per_episode < 1:
            raise ValueError("frames_per_episode must be >= 1")
        if self.dt <= 0:
            raise ValueError("dt must be > 0")


@dataclass
class ObsConfig:
    memory: int = 1                  # stacked frames M
    sinr_clip_db: tuple = (-20.0, 60.0)
    aoa_std_cap: float = float(np.pi)

    def __post_init__(self):
        if self.memory < 1:
            raise ValueError("memory must be >= 1")
        lo, hi = self.sinr_clip_db
        if not hi > lo:
            raise ValueError("sinr_clip_db window must be increasing")


@dataclass
class EnvConfig:
    wind: wd.WindConfig = field(default_factory=wd.WindConfig)
    area: mb.AreaConfig = field(default_factory=mb.AreaConfig)
    radio: ch.RadioConfig = field(default_factory=ch.RadioConfig)
    reward: RewardConfig = field(default_factory=RewardConfig)
    episode: EpisodeConfig = field(default_factory=EpisodeConfig)
    obs: ObsConfig = field(default_factory=ObsConfig)
    r_max: float = 50.0              # m per frame
    wind_affects_haps: bool = True   # off for the position-frozen baseline

    def __post_init__(self):
        if self.r_max <= 0:
            raise ValueError("r_max must be > 0")
        if self.wind.dt != self.episode.dt:
            raise ValueError("wind.dt and episode.dt must agree")

    @property
    def obs_dim(self) -> int:
        return 6 * self.area.num_haps * self.obs.memory

    @property
    def action_dim(self) -> int:
        return 2 * self.area.num_haps


@dataclass(frozen=True)
class Observation:
    """Raw per-HAPS rows (x, y, z, mean_sinr_db, aoa_mean, aoa_std) and the
    normalized, memory-stacked vector (oldest frame first)."""
    raw: np.ndarray     # (D, 6)
    vector: np.ndarray  # (6 * D * M,)


def sigmoid_reward(fair: float, cfg: RewardConfig) -> float:
    return float(expit(cfg.c_s * (fair - cfg.c_m)))


def observe(
    world: mb.WorldState,
    sinr_db: np.ndarray,
    aoa_rad: np.ndarray,
    area: mb.AreaConfig,
) -> np.ndarray:
    """Per-HAPS raw observation rows from (H, N) SINR-dB and AoA matrices."""
    mean_sinr = sinr_db.mean(axis=1)
    aoa_mean = ch.circular_mean(aoa_rad, axis=1)
    aoa_std = ch.circular_std(aoa_rad, axis=1)
    z = np.full(area.num_haps, area.haps_altitude)
    return np.column_stack([world.haps_xy[:, 0], world.haps_xy[:, 1], z, mean_sinr, aoa_mean, aoa_std])


def normalize_frame(raw: np.ndarray, area: mb.AreaConfig, obs_cfg: ObsConfig) -> np.ndarray:
    """Flatten one raw (D, 6) frame into the (6D,) policy encoding.

    x, y scaled by the half extent; z dropped (constant); SINR clipped to the
    configured dB window then mapped affinely to [-1, 1]; the circular AoA
    mean becomes (sin, cos); the AoA std is capped and scaled to [0, 1].
    """
    lo, hi = obs_cfg.sinr_clip_db
    x = raw[:, 0] / area.half_extent
    y = raw[:, 1] / area.half_extent
    s = (np.clip(raw[:, 3], lo, hi) - 0.5 * (lo + hi)) / (0.5 * (hi - lo))
    per_haps = np.column_stack([
        x, y, s,
        np.sin(raw[:, 4]), np.cos(raw[:, 4]),
        np.clip(raw[:, 5], 0.0, obs_cfg.aoa_std_cap) / obs_cfg.aoa_std_cap,
    ])
    return per_haps.reshape(-1)


class HapsEnv:
    """Single-instance, strictly sequential environment.

    Each reset spawns fresh RNG streams for world init, wind innovations,
    shadowing and fading from one seed, so a (seed, scenario) pair fully
    determines the episode's exogenous randomness.
    """

    def __init__(self, cfg: EnvConfig, seed: int | None = None, record_trace: bool = False):
        self.cfg = cfg
        self._root = np.random.SeedSequence(seed)
        self.record_trace = record_trace
        self.trace: list[dict] = []
        self.world: mb.WorldState | None = None
        self._done = True

    # -- episode lifecycle -------------------------------------------------

    def reset(self, scenario: int | str | np.ndarray = "random", seed=None) -> Observation:
        if seed is None:
            ss = self._root.spawn(1)[0]
        elif isinstance(seed, np.random.SeedSequence):
            ss = seed
        else:
            ss = np.random.SeedSequence(seed)
        world_ss, wind_ss, shadow_ss, fading_ss = ss.spawn(4)
        self._rng_wind = np.random.default_rng(wind_ss)
        self._rng_fading = np.random.default_rng(fading_ss)

        cfg = self.cfg
        self.world = mb.init_world(cfg.area, scenario, np.random.default_rng(world_ss))
        self.wind_state = wd.init_wind(cfg.wind, self._rng_wind, cfg.area.num_haps)
        self.links = ch.draw_shadowing(
            cfg.radio, np.random.default_rng(shadow_ss), cfg.area.num_ues, cfg.area.num_haps
        )
        self._serving = np.repeat(np.arange(cfg.area.num_haps), cfg.area.ues_per_hotspot)
        self._frame = 0
        self._done = False
        self.trace = []

        frame_vec, raw, info = self._evaluate_downlink()
        self._memory = [frame_vec] * cfg.obs.memory
        self._last_info = info
        if self.record_trace:
            self._record(info, reward=None)
        return Observation(raw=raw, vector=np.concatenate(self._memory))

    def step(self, actions):
        """Advance one frame; returns (Observation, reward, done, info)."""
        if self.world is None or self._done:
            raise RuntimeError("step() called on a finished episode; call reset() first")
        cfg = self.cfg

        noise = self._rng_wind.standard_normal(self.wind_state.residual.shape)
        self.wind_state = wd.ar1_step(self.wind_state, cfg.wind, noise)
        wind_vec = wd.wind_velocity(self.wind_state, cfg.wind)

        drift = wind_vec if cfg.wind_affects_haps else np.zeros(2)
        self.world = mb.step_haps(self.world, actions, drift, cfg.area, cfg.episode.dt, cfg.r_max)
        self.world = mb.step_hotspots(self.world, cfg.area, cfg.episode.dt)

        frame_vec, raw, info = self._evaluate_downlink(wind_vec)
        reward = sigmoid_reward(info["fair_rate"], cfg.reward)
        info["reward"] = reward

        self._frame += 1
        self.world = replace(self.world, frame=self._frame)
        self._done = self._frame >= cfg.episode.frames_per_episode
        self._memory = self._memory[1:] + [frame_vec]
        self._last_info = info
        if self.record_trace:
            self._record(info, reward)
        return Observation(raw=raw, vector=np.concatenate(self._memory)), reward, self._done, info

    # -- internals ---------------------------------------------------------

    def _evaluate_downlink(self, wind_vec=None):
        cfg = self.cfg
        area = cfg.area
        ue_xy = mb.ue_positions(self.world).reshape(area.num_ues, 2)
        dvec = ue_xy[:, None, :] - self.world.haps_xy[None, :, :]  # (U, D, 2)
        horiz2 = np.sum(dvec**2, axis=-1)
        dz = area.haps_altitude - area.ue_altitude
        dist = np.sqrt(horiz2 + dz * dz)
        sin_off = np.sqrt(horiz2) / dist

        beta = (
            ch.pathloss_gain(dist, cfg.radio)
            * self.links.shadow_lin
            * cfg.radio.boresight_gain_lin
            * ch.aperture_pattern(cfg.radio.wavenumber_aperture * sin_off)
        )
        self.links.fading = ch.rician_fading(cfg.radio, self._rng_fading, dist)
        h2 = np.abs(self.links.fading) ** 2
        sinr = ch.sinr_matrix(beta, h2, self._serving, cfg.radio)
        geff = ch.effective_sinr(sinr)
        rates = ch.ue_throughput(geff, cfg.radio, area.ues_per_hotspot)
        fair = ch.fair_rate(rates)

        n, d = area.ues_per_hotspot, area.num_haps
        geff_db = 10.0 * np.log10(np.maximum(geff, 1e-30)).reshape(d, n)
        serving_vec = dvec[np.arange(area.num_ues), self._serving, :]
        aoa_ue = np.where(
            np.sum(serving_vec**2, axis=-1) > 0.0,
            ch.wrap_pi(np.arctan2(serving_vec[:, 1], serving_vec[:, 0])),
            0.0,
        ).reshape(d, n)

        raw = observe(self.world, geff_db, aoa_ue, area)
        frame_vec = normalize_frame(raw, area, cfg.obs)
        info = {
            "fair_rate": fair,
            "throughputs_bps": rates,
            "sum_throughput_mbps": float(rates.sum() / 1e6),
            "floored_rates": ch.count_floored(rates),
            "effective_sinr": geff,
            "wind": np.zeros(2) if wind_vec is None else np.atleast_1d(wind_vec),
            "haps_xy": self.world.haps_xy.copy(),
            "hotspot_xy": self.world.hotspot_xy.copy(),
            "centroid_dist_m": np.sqrt(
                np.sum((self.world.haps_xy - self.world.hotspot_xy) ** 2, axis=-1)
            ),
            "frame": self._frame,
        }
        return frame_vec, raw, info

    def _record(self, info, reward):
        row = {"frame": info["frame"], "fair_rate": info["fair_rate"], "reward": reward}
        for d in range(self.cfg.area.num_haps):
            row[f"haps{d}_x"], row[f"haps{d}_y"] = info["haps_xy"][d]
            row[f"hot{d}_x"], row[f"hot{d}_y"] = info["hotspot_xy"][d]
        w = info["wind"]
        row["wind_x"], row["wind_y"] = (w[0], w[1]) if w.ndim == 1 else (w[:, 0].mean(), w[:, 1].mean())
        self.trace.append(row)

    def write_trace(self, path):
        """Dump the recorded per-frame rows as CSV for plotting/regression."""
        if not self.trace:
            raise ValueError("no trace recorded; construct the env with record_trace=True")
        cols = list(self.trace[0].keys())
        with open(path, "w") as f:
            f.write(",".join(cols) + "\n")
            for row in self.trace:
                f.write(",".join("" if row[c] is None else format(row[c], ".10g") for c in cols) + "\n")
