"""Stratospheric horizontal wind: mean flow + slow sinusoid + AR(1) residual.

The wind velocity applied to the platforms each frame is the sum of three
independently computable terms,

    v(t) = v_mean + v_slow(t) + v_res(t),

where v_mean is a constant flow along ``mean_direction``, v_slow is a
sinusoidal modulation of that flow's strength, and v_res is a temporally
correlated Gaussian residual.  The residual is an AR(1) process whose
innovations are scaled by sqrt(1 - rho^2) so that ``residual_std`` is the
*stationary* per-axis standard deviation.
"""
from __future__ import annotations

from dataclasses import dataclass, replace

import numpy as np

TWO_PI = 2.0 * np.pi


@dataclass
class WindConfig:
    mean_speed: float = 4.0        # m/s
    mean_direction: float = 0.0    # rad from east
    residual_std: float = 2.0      # stationary per-axis std, m/s
    temporal_rho: float = 0.95     # lag-1 autocorrelation
    slow_amplitude: float = 1.0    # m/s
    slow_period: int = 128         # frames
    dt: float = 2.0                # seconds per frame
    shared_field: bool = True      # one wind sample applied to every HAPS
    spatial_scale_m: float = 1000.0  # metadata only; no operation consumes it

    def __post_init__(self):
        if not 0.0 <= self.temporal_rho < 1.0:
            raise ValueError(f"temporal_rho must be in [0,1), got {self.temporal_rho}")
        if self.residual_std < 0.0:
            raise ValueError("residual_std must be >= 0")
        if self.slow_period < 1:
            raise ValueError("slow_period must be >= 1")
        if self.dt <= 0.0:
            raise ValueError("dt must be > 0")

    @property
    def mean_velocity(self) -> np.ndarray:
        return self.mean_speed * np.array(
            [np.cos(self.mean_direction), np.sin(self.mean_direction)]
        )

    @property
    def innovation_std(self) -> float:
        # scaling that makes residual_std the stationary std of the AR(1)
        return self.residual_std * np.sqrt(1.0 - self.temporal_rho**2)


@dataclass
class WindState:
    residual: np.ndarray  # (2,) when shared, (D, 2) per-HAPS otherwise
    frame_index: int = 0


def init_wind(cfg: WindConfig, rng: np.random.Generator, num_haps: int = 1) -> WindState:
    """Fresh wind state with the residual drawn from its stationary law."""
    shape = (2,) if cfg.shared_field else (num_haps, 2)
    residual = cfg.residual_std * rng.standard_normal(shape)
    return WindState(residual=residual, frame_index=0)


def slow_variation(cfg: WindConfig, frame: int) -> np.ndarray:
    """Slow sinusoidal term at a frame, directed along the mean-wind axis."""
    if frame < 0:
        raise ValueError("frame must be >= 0")
    unit = np.array([np.cos(cfg.mean_direction), np.sin(cfg.mean_direction)])
    return cfg.slow_amplitude * np.sin(TWO_PI * frame / cfg.slow_period) * unit


def ar1_step(state: WindState, cfg: WindConfig, noise: np.ndarray) -> WindState:
    """Advance the residual one frame using the given unit-Gaussian innovations."""
    noise = np.asarray(noise, dtype=float)
    if noise.shape != state.residual.shape:
        raise ValueError(f"noise shape {noise.shape} != residual shape {state.residual.shape}")
    residual = cfg.temporal_rho * state.residual + cfg.innovation_std * noise
    return replace(state, residual=residual, frame_index=state.frame_index + 1)


def wind_velocity(state: WindState, cfg: WindConfig) -> np.ndarray:
    """Total wind at the state's frame: mean + slow + residual.

    Shape follows the residual: (2,) shared, (D, 2) per-HAPS.
    """
    return cfg.mean_velocity + slow_variation(cfg, state.frame_index) + state.residual
