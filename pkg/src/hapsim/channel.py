"""Downlink link budget, fading, SINR, throughput and the log-fair objective.

All gains are linear power ratios; dB/dBm only at the config boundary and in
debug exports.  Power bookkeeping is in mW.  The per-link large-scale gain is

    beta = pathloss_gain * shadowing * reflector_gain(off-axis angle),

small-scale fading is Rician per resource block with unit mean power, and
per-RB SINRs are compressed to an effective SINR with the capacity map
f(x) = log2(1 + x).
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.special import j1

SPEED_OF_LIGHT = 299792458.0
LN2 = float(np.log(2.0))


@dataclass
class RadioConfig:
    carrier_hz: float = 3.5e9
    total_bw_hz: float = 100e6       # per HAPS
    num_rb: int = 25                 # coarse subbands
    tx_power_dbm: float = 55.0       # total, split equally across RBs
    noise_dbm_per_mhz: float = -114.0
    rician_k_db: float = 10.0
    shadowing_std_db: float = 4.0
    boresight_gain_dbi: float = 30.0
    aperture_radius_m: float = 0.857  # ~10 wavelengths at 3.5 GHz
    gaseous_db: float = 0.5
    rain_db: float = 0.0
    cloud_db: float = 0.0
    scintillation_db: float = 0.0
    clutter_db: float = 0.0

    def __post_init__(self):
        if self.num_rb < 1:
            raise ValueError("num_rb must be >= 1")
        if not np.isfinite(self.tx_power_dbm):
            raise ValueError("tx_power_dbm must be finite")
        if self.rician_k_lin < 0:
            raise ValueError("Rician K must be >= 0 in linear units")

    @property
    def wavelength_m(self) -> float:
        return SPEED_OF_LIGHT / self.carrier_hz

    @property
    def rb_bw_hz(self) -> float:
        return self.total_bw_hz / self.num_rb

    @property
    def tx_power_mw(self) -> float:
        return 10.0 ** (self.tx_power_dbm / 10.0)

    @property
    def rb_power_mw(self) -> float:
        return self.tx_power_mw / self.num_rb

    @property
    def noise_rb_dbm(self) -> float:
        return self.noise_dbm_per_mhz + 10.0 * np.log10(self.rb_bw_hz / 1e6)

    @property
    def noise_rb_mw(self) -> float:
        return 10.0 ** (self.noise_rb_dbm / 10.0)

    @property
    def rician_k_lin(self) -> float:
        return 10.0 ** (self.rician_k_db / 10.0)

    @property
    def boresight_gain_lin(self) -> float:
        return 10.0 ** (self.boresight_gain_dbi / 10.0)

    @property
    def extra_atten_db(self) -> float:
        return self.gaseous_db + self.rain_db + self.cloud_db + self.scintillation_db + self.clutter_db

    @property
    def wavenumber_aperture(self) -> float:
        # k*a with k = 2*pi*f/c
        return 2.0 * np.pi * self.carrier_hz / SPEED_OF_LIGHT * self.aperture_radius_m


@dataclass
class LinkState:
    """Per-episode shadowing (linear, (U, D)) and the current fading draw."""
    shadow_lin: np.ndarray
    fading: np.ndarray | None = None  # (U, D, K) complex, redrawn per frame


def draw_shadowing(cfg: RadioConfig, rng: np.random.Generator, num_ue: int, num_haps: int) -> LinkState:
    shadow_db = cfg.shadowing_std_db * rng.standard_normal((num_ue, num_haps))
    return LinkState(shadow_lin=10.0 ** (shadow_db / 10.0))


def fspl_gain(distance_m, carrier_hz: float):
    """Free-space power gain (c / (4 pi d f))^2; < 1 for far links."""
    d = np.asarray(distance_m, dtype=float)
    return (SPEED_OF_LIGHT / (4.0 * np.pi * d * carrier_hz)) ** 2


def pathloss_gain(distance_m, cfg: RadioConfig):
    """FSPL with the constant gaseous/rain/cloud/scintillation/clutter terms."""
    return fspl_gain(distance_m, cfg.carrier_hz) * 10.0 ** (-cfg.extra_atten_db / 10.0)


def aperture_pattern(x):
    """Normalized circular-aperture power pattern 4*(J1(x)/x)^2, pattern(0) = 1."""
    x = np.asarray(x, dtype=float)
    small = np.abs(x) < 1e-6
    safe = np.where(small, 1.0, x)
    val = 4.0 * (j1(safe) / safe) ** 2
    return np.where(small, 1.0 - x * x / 4.0, val)


def reflector_gain(offaxis_angle_rad, cfg: RadioConfig):
    """Antenna power gain at an off-axis angle from the nadir boresight."""
    x = cfg.wavenumber_aperture * np.sin(offaxis_angle_rad)
    return cfg.boresight_gain_lin * aperture_pattern(x)


def rician_sample(cfg: RadioConfig, rng: np.random.Generator, los_phase, size=None):
    """Unit-mean-power Rician fading: scaled LoS phasor plus Rayleigh scatter."""
    k = cfg.rician_k_lin
    los = np.exp(1j * np.asarray(los_phase, dtype=float))
    if size is None:
        size = los.shape
    scatter = (rng.standard_normal(size) + 1j * rng.standard_normal(size)) / np.sqrt(2.0)
    return np.sqrt(k / (1.0 + k)) * los + np.sqrt(1.0 / (1.0 + k)) * scatter


def rician_fading(cfg: RadioConfig, rng: np.random.Generator, distance_m: np.ndarray) -> np.ndarray:
    """Per-RB fading (U, D, K); LoS phase from the plane-wave path length.

    The LoS term is frequency-flat across RBs; scatter is i.i.d. per RB.
    """
    # mod before the 2*pi multiply keeps phase precision at d ~ 20 km
    phase = -2.0 * np.pi * np.mod(distance_m / cfg.wavelength_m, 1.0)
    return rician_sample(cfg, rng, phase[:, :, None], size=distance_m.shape + (cfg.num_rb,))


def sinr_per_rb(beta: np.ndarray, h2: np.ndarray, serving: int, cfg: RadioConfig) -> float:
    """Single-link SINR on one RB given per-HAPS gains beta (D,) and |h|^2 (D,)."""
    p = np.asarray(beta) * np.asarray(h2) * cfg.rb_power_mw
    signal = p[serving]
    interference = p.sum() - signal
    return float(signal / (interference + cfg.noise_rb_mw))


def sinr_matrix(beta: np.ndarray, h2: np.ndarray, serving: np.ndarray, cfg: RadioConfig) -> np.ndarray:
    """Per-UE, per-RB SINR (U, K) with every HAPS transmitting on every RB.

    beta is (U, D), h2 is (U, D, K); serving maps each UE to its HAPS.
    """
    p = beta[:, :, None] * h2 * cfg.rb_power_mw  # (U, D, K) received mW
    u = np.arange(beta.shape[0])
    signal = p[u, serving, :]
    total = p.sum(axis=1)
    return signal / (total - signal + cfg.noise_rb_mw)


def effective_sinr(per_rb: np.ndarray, axis: int = -1) -> np.ndarray:
    """Capacity-based effective SINR: f_inv(mean(f(g))) with f = log2(1 + x)."""
    per_rb = np.asarray(per_rb, dtype=float)
    if per_rb.shape[axis] < 1:
        raise ValueError("need at least one RB")
    return np.expm1(np.mean(np.log1p(per_rb), axis=axis))


def ue_throughput(gamma_eff, cfg: RadioConfig, n_ue_sched: int):
    """Shannon rate in bit/s over the 1/n round-robin share of the band."""
    if n_ue_sched < 1:
        raise ValueError("n_ue_sched must be >= 1")
    share = cfg.num_rb * cfg.rb_bw_hz / n_ue_sched
    return share * np.log1p(np.asarray(gamma_eff, dtype=float)) / LN2


def fair_rate(throughputs_bps, r_min_bps: float = 1e3) -> float:
    """Sum of log10 per-UE throughputs in Mbps; rates below r_min are floored.

    The 1 kbps floor keeps dead links at a finite penalty (log10 term -3)
    instead of -inf; count floored terms via `count_floored`.
    """
    r = np.maximum(np.asarray(throughputs_bps, dtype=float), r_min_bps)
    return float(np.sum(np.log10(r / 1e6)))


def count_floored(throughputs_bps, r_min_bps: float = 1e3) -> int:
    return int(np.sum(np.asarray(throughputs_bps) < r_min_bps))


def aoa(haps_xy, ue_xy) -> tuple[float, bool]:
    """Azimuth from a HAPS's ground point to a UE, east = 0, in [-pi, pi).

    Returns (angle, degenerate); degenerate means horizontally coincident
    positions, for which the angle is defined as 0.
    """
    d = np.asarray(ue_xy, dtype=float) - np.asarray(haps_xy, dtype=float)
    if d[0] == 0.0 and d[1] == 0.0:
        return 0.0, True
    return float(wrap_pi(np.arctan2(d[1], d[0]))), False


def wrap_pi(angle):
    """Wrap angles to [-pi, pi)."""
    return np.mod(np.asarray(angle, dtype=float) + np.pi, 2.0 * np.pi) - np.pi


def circular_mean(angles, axis=None):
    s = np.mean(np.sin(angles), axis=axis)
    c = np.mean(np.cos(angles), axis=axis)
    return wrap_pi(np.arctan2(s, c))


def circular_std(angles, axis=None):
    """sqrt(-2 ln Rbar); 0 for identical angles, grows as angles disperse."""
    s = np.mean(np.sin(angles), axis=axis)
    c = np.mean(np.cos(angles), axis=axis)
    rbar = np.clip(np.sqrt(s * s + c * c), 1e-12, 1.0)
    return np.sqrt(-2.0 * np.log(rbar))
