"""Fast invariant suite: wind statistics, link-budget goldens, channel
properties, reward calibration, and PPO gradient/advantage correctness.

Each check returns a CheckResult; the CLI `check` subcommand prints one
line per check, and the acceptance tests assert on the same functions.
"""
from __future__ import annotations

import time
from dataclasses import dataclass

import numpy as np

from . import channel as ch
from . import nets, ppo
from . import wind as wd
from .env import RewardConfig, sigmoid_reward

J1_FIRST_ZERO = 3.8317059702075123  # first positive root of the Bessel J1


@dataclass
class CheckResult:
    name: str
    passed: bool
    detail: str
    seconds: float


def _result(name: str, t0: float, passed: bool, detail: str) -> CheckResult:
    return CheckResult(name, bool(passed), detail, time.perf_counter() - t0)


def check_wind_statistics(frames: int = 200_000, seed: int = 1) -> CheckResult:
    t0 = time.perf_counter()
    cfg = wd.WindConfig()
    rng = np.random.default_rng(seed)
    state = wd.init_wind(cfg, rng)
    res = np.empty((frames, 2))
    noise = rng.standard_normal((frames, 2))
    for t in range(frames):
        state = wd.ar1_step(state, cfg, noise[t])
        res[t] = state.residual
    stds = res.std(axis=0)
    rho = np.array([np.corrcoef(res[:-1, a], res[1:, a])[0, 1] for a in range(2)])

    n = 16 * cfg.slow_period
    slow = np.array([wd.slow_variation(cfg, t)[0] for t in range(n)])
    spec = np.abs(np.fft.rfft(slow))
    peak = int(np.argmax(spec[1:]) + 1)
    period = n / peak

    ok = (
        np.all(np.abs(stds - cfg.residual_std) <= 0.1)
        and np.all(np.abs(rho - cfg.temporal_rho) <= 0.02)
        and period == cfg.slow_period
    )
    detail = (f"std=({stds[0]:.3f},{stds[1]:.3f}) target 2.0+-0.1; "
              f"rho=({rho[0]:.3f},{rho[1]:.3f}) target 0.95+-0.02; "
              f"FFT period={period:.0f} target {cfg.slow_period}")
    return _result("wind statistics", t0, ok, detail)


def check_link_budget_goldens() -> CheckResult:
    t0 = time.perf_counter()
    cfg = ch.RadioConfig()
    fspl_db = -10.0 * np.log10(ch.fspl_gain(20000.0, 3.5e9))
    xs = np.arange(3.5, 4.2, 1e-5)
    null_x = xs[np.argmin(ch.aperture_pattern(xs))]
    noise_db = cfg.noise_rb_dbm
    ok = (
        abs(fspl_db - 129.35) <= 0.01
        and abs(null_x - J1_FIRST_ZERO) <= 0.001
        and abs(noise_db - (-107.98)) <= 0.01
    )
    detail = (f"FSPL(20km,3.5GHz)={fspl_db:.4f} dB target 129.35+-0.01; "
              f"first null x={null_x:.5f} target {J1_FIRST_ZERO:.5f}+-0.001; "
              f"per-RB noise={noise_db:.4f} dBm target -107.98+-0.01")
    return _result("link-budget goldens", t0, ok, detail)


def check_channel_properties(seed: int = 2) -> CheckResult:
    t0 = time.perf_counter()
    rng = np.random.default_rng(seed)
    powers = []
    for k_db in (0.0, 10.0, 30.0):
        cfg = ch.RadioConfig(rician_k_db=k_db)
        phase = rng.uniform(-np.pi, np.pi, size=1_000_000)
        h = ch.rician_sample(cfg, rng, phase)
        powers.append(float(np.mean(np.abs(h) ** 2)))
    unit_ok = all(abs(p - 1.0) <= 0.01 for p in powers)

    sandwich_ok = True
    for _ in range(100):
        g = rng.uniform(0.0, 1e3, size=(100, rng.integers(1, 40)))
        eff = ch.effective_sinr(g)
        if not (np.all(eff >= g.min(axis=1) - 1e-12) and np.all(eff <= g.max(axis=1) + 1e-12)):
            sandwich_ok = False
            break

    mono_ok = True
    for _ in range(1000):
        rates = 10.0 ** rng.uniform(4.0, 9.0, size=30)  # 10 kbps .. 1 Gbps
        base = ch.fair_rate(rates)
        i = rng.integers(0, 30)
        rates[i] *= 1.0 + rng.uniform(0.01, 1.0)
        if not ch.fair_rate(rates) > base:
            mono_ok = False
            break

    ok = unit_ok and sandwich_ok and mono_ok
    detail = (f"E|h|^2={['%.4f' % p for p in powers]} target 1+-0.01; "
              f"ESM sandwich {'ok' if sandwich_ok else 'VIOLATED'} (1e4 vectors); "
              f"fair-rate monotone {'ok' if mono_ok else 'VIOLATED'} (1e3 probes)")
    return _result("channel properties", t0, ok, detail)


def check_reward_calibration() -> CheckResult:
    t0 = time.perf_counter()
    cfg = RewardConfig()
    mid = sigmoid_reward(50.0, cfg)
    above = sigmoid_reward(54.0, cfg)
    ok = mid == 0.5 and abs(above - 0.7310585786) <= 1e-4
    detail = f"reward(50)={mid} target 0.5 exact; reward(54)={above:.6f} target 0.731059+-1e-4"
    return _result("reward calibration", t0, ok, detail)


def check_ppo_correctness(trials: int = 20) -> CheckResult:
    t0 = time.perf_counter()
    worst = 0.0
    for trial in range(trials):
        rng = np.random.default_rng(1000 + trial)
        net = ppo.NetConfig(obs_dim=5, action_dim=4, hidden_layers=3, hidden_width=4)
        cfg = ppo.PpoConfig()
        params = ppo.init_policy(net, rng)
        batch = ppo.make_synthetic_batch(params, cfg, rng, 8)
        worst = max(worst, ppo.grad_check(params, batch, cfg))
    grad_ok = worst < 1e-4

    # 3-step GAE against hand-computed values, gamma = 0.9, terminal last step
    rewards, values, dones = [1.0, 0.0, 2.0], [0.5, 1.0, -0.5], [False, False, True]
    expected = {
        0.0: [1.4, -1.45, 2.5],
        0.95: [1.9878125, 0.6875, 2.5],
        1.0: [2.12, 0.8, 2.5],
    }
    gae_ok = True
    for lam, want in expected.items():
        adv, ret = ppo.gae(rewards, values, dones, 0.9, lam)
        if not (np.allclose(adv, want, atol=1e-12) and np.allclose(ret, np.array(want) + values)):
            gae_ok = False

    clip_ok = True
    rng = np.random.default_rng(99)
    for _ in range(50):
        grads = [rng.standard_normal((4, 4)), rng.standard_normal(4)]
        scale = rng.uniform(1.1, 50.0) / max(nets.global_norm(grads), 1e-9)
        grads = [g * scale for g in grads]  # pre-clip norm > 1 by construction
        pre = nets.clip_by_global_norm(grads, 1.0)
        post = nets.global_norm(grads)
        if not (pre > 1.0 and post <= 1.0 + 1e-6):
            clip_ok = False

    ok = grad_ok and gae_ok and clip_ok
    detail = (f"grad-check worst rel err={worst:.2e} target <1e-4 over {trials} trials; "
              f"GAE hand values {'ok' if gae_ok else 'VIOLATED'}; "
              f"post-clip norm<=1+1e-6 {'ok' if clip_ok else 'VIOLATED'}")
    return _result("PPO correctness", t0, ok, detail)


def run_all() -> list[CheckResult]:
    return [
        check_wind_statistics(),
        check_link_budget_goldens(),
        check_channel_properties(),
        check_reward_calibration(),
        check_ppo_correctness(),
    ]
