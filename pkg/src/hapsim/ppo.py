"""Actor-critic PPO for the joint continuous positioning action, in numpy.

One centralized Gaussian policy outputs means and log-stds for all 2*D
action dimensions; raw samples are tanh-squashed and affinely mapped to
(angle in [-pi, pi), distance in [0, r_max]) per HAPS, with the change of
variables included in the log-probability.  Updates use the clipped
surrogate objective with GAE advantages, an entropy bonus on the pre-squash
Gaussian, global gradient-norm clipping and Adam.  Gradients are hand-coded
(see `grad_check` for the finite-difference cross-check).
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from . import nets

HALF_LOG_2PI = 0.5 * np.log(2.0 * np.pi)
# one ulp below pi: squashed angles stay inside the half-open [-pi, pi)
ANGLE_MAX = np.nextafter(np.pi, 0.0)


class NumericalError(RuntimeError):
    """Raised when an update produces non-finite numbers."""


@dataclass
class NetConfig:
    obs_dim: int
    action_dim: int          # 2 * D
    hidden_layers: int = 3
    hidden_width: int = 128

    def __post_init__(self):
        if self.hidden_layers < 1 or self.hidden_width < 1:
            raise ValueError("hidden layer count and width must be >= 1")

    @property
    def actor_sizes(self) -> list[int]:
        # output carries means and log-stds for every action dimension
        return [self.obs_dim] + [self.hidden_width] * self.hidden_layers + [2 * self.action_dim]

    @property
    def critic_sizes(self) -> list[int]:
        return [self.obs_dim] + [self.hidden_width] * self.hidden_layers + [1]


@dataclass
class PpoConfig:
    lr: float = 3e-5
    gamma_df: float = 0.99
    gae_lambda: float = 0.95
    clip_eps: float = 0.2
    entropy_coef: float = 0.1
    value_coef: float = 0.5
    max_grad_norm: float = 1.0
    epochs_per_update: int = 10
    minibatch_size: int = 32
    rollout_frames: int = 128
    advantage: str = "gae"   # "gae" | "paper_literal"
    log_std_min: float = -5.0
    log_std_max: float = 2.0
    log_std_init: float = -0.5
    adam_beta1: float = 0.9
    adam_beta2: float = 0.999
    adam_eps: float = 1e-8

    def __post_init__(self):
        if not 0.0 < self.gamma_df <= 1.0:
            raise ValueError("gamma_df must be in (0, 1]")
        if not 0.0 <= self.gae_lambda <= 1.0:
            raise ValueError("gae_lambda must be in [0, 1]")
        if self.clip_eps <= 0.0:
            raise ValueError("clip_eps must be > 0")
        if self.advantage not in ("gae", "paper_literal"):
            raise ValueError(f"unknown advantage mode {self.advantage!r}")


@dataclass
class PolicyParams:
    actor: list[np.ndarray]
    critic: list[np.ndarray]

    def all(self) -> list[np.ndarray]:
        return self.actor + self.critic

    def copy(self) -> "PolicyParams":
        return PolicyParams([p.copy() for p in self.actor], [p.copy() for p in self.critic])


def init_policy(net_cfg: NetConfig, rng: np.random.Generator, log_std_init: float = -0.5) -> PolicyParams:
    actor = nets.mlp_init(rng, net_cfg.actor_sizes, out_gain=0.01)
    actor[-1][net_cfg.action_dim:] = log_std_init  # log-std head starts at a fixed spread
    critic = nets.mlp_init(rng, net_cfg.critic_sizes, out_gain=1.0)
    return PolicyParams(actor=actor, critic=critic)


# -- distribution ------------------------------------------------------------


def action_scales(num_haps: int, r_max: float) -> np.ndarray:
    """|d action / d tanh(raw)| per dimension, ordered (angle, dist) per HAPS."""
    return np.tile(np.array([np.pi, r_max / 2.0]), num_haps)


def squash(raw: np.ndarray, r_max: float) -> np.ndarray:
    """Map raw (2D,) to a (D, 2) action array of (angle, distance)."""
    t = np.tanh(np.asarray(raw, dtype=float)).reshape(-1, 2)
    angle = np.minimum(np.pi * t[:, 0], ANGLE_MAX)
    dist = (t[:, 1] + 1.0) * (r_max / 2.0)
    return np.stack([angle, dist], axis=-1)


def _log1m_tanh2(u: np.ndarray) -> np.ndarray:
    # log(1 - tanh(u)^2) = 2*(log 2 - u - softplus(-2u)), stable for large |u|
    return 2.0 * (np.log(2.0) - u - np.logaddexp(0.0, -2.0 * u))


def tanh_log_jacobian(raw: np.ndarray, scales: np.ndarray) -> np.ndarray:
    """Per-sample log |d action / d raw| summed over dimensions."""
    return np.sum(_log1m_tanh2(raw) + np.log(scales), axis=-1)


def gaussian_log_prob(mean: np.ndarray, log_std: np.ndarray, raw: np.ndarray) -> np.ndarray:
    z = (raw - mean) / np.exp(log_std)
    return np.sum(-0.5 * z * z - log_std - HALF_LOG_2PI, axis=-1)


def log_prob_of_raw(mean, log_std, raw, scales) -> np.ndarray:
    """Log density of the squashed action reached through the given raw sample."""
    return gaussian_log_prob(mean, log_std, raw) - tanh_log_jacobian(raw, scales)


def entropy_base(log_std: np.ndarray) -> np.ndarray:
    """Entropy of the pre-squash Gaussian, per sample."""
    return np.sum(log_std + 0.5 + HALF_LOG_2PI, axis=-1)


# Gauss-Hermite nodes for the expected tanh-Jacobian term of the squashed
# entropy; 16 points resolve log(sech^2) well over the sigmas in play.
_GH_X, _GH_W = np.polynomial.hermite.hermgauss(16)
_GH_W = _GH_W / np.sqrt(np.pi)


def _jacobian_expectation(mean: np.ndarray, log_std: np.ndarray):
    """E[log(1 - tanh(u)^2)] for u ~ N(mean, exp(log_std)), per entry.

    Returns (value, d/d mean, d/d log_std); all computed by quadrature so the
    entropy bonus below is smooth and exactly differentiable.
    """
    sigma = np.exp(log_std)
    u = mean[..., None] + np.sqrt(2.0) * sigma[..., None] * _GH_X
    f = _log1m_tanh2(u)
    fp = -2.0 * np.tanh(u)
    val = np.sum(_GH_W * f, axis=-1)
    dmean = np.sum(_GH_W * fp, axis=-1)
    dlogstd = np.sum(_GH_W * fp * np.sqrt(2.0) * _GH_X, axis=-1) * sigma
    return val, dmean, dlogstd


def entropy_squashed(mean: np.ndarray, log_std: np.ndarray, scales: np.ndarray) -> np.ndarray:
    """Differential entropy of the tanh-squashed policy, per sample.

    Sum over independent dimensions of the base-Gaussian entropy plus the
    expected log-Jacobian of the squashing map.  Unlike the base entropy,
    this peaks near the uniform distribution over the action box and falls
    once the squash saturates, so maximizing it cannot push sigma to the
    clamp bound.
    """
    jac, _, _ = _jacobian_expectation(mean, log_std)
    return np.sum(log_std + 0.5 + HALF_LOG_2PI + np.log(scales) + jac, axis=-1)


def policy_forward(params: PolicyParams, obs: np.ndarray, cfg: PpoConfig):
    """Actor pass: (mean, log_std) with log_std clamped to the config window."""
    obs = np.asarray(obs, dtype=float)
    single = obs.ndim == 1
    x = obs[None, :] if single else obs
    if x.shape[1] != params.actor[0].shape[0]:
        raise ValueError(f"obs dim {x.shape[1]} != expected {params.actor[0].shape[0]}")
    out, _ = nets.mlp_forward(params.actor, x)
    a = out.shape[1] // 2
    mean, ls_raw = out[:, :a], out[:, a:]
    log_std = np.clip(ls_raw, cfg.log_std_min, cfg.log_std_max)
    if single:
        return mean[0], log_std[0]
    return mean, log_std


def value_forward(params: PolicyParams, obs: np.ndarray) -> np.ndarray:
    obs = np.asarray(obs, dtype=float)
    single = obs.ndim == 1
    x = obs[None, :] if single else obs
    out, _ = nets.mlp_forward(params.critic, x)
    v = out[:, 0]
    return float(v[0]) if single else v


def sample_action(mean, log_std, rng: np.random.Generator, r_max: float):
    """Draw raw ~ N(mean, exp(log_std)); returns (raw, (D,2) actions, log_prob)."""
    mean = np.asarray(mean, dtype=float)
    eps = rng.standard_normal(mean.shape)
    raw = mean + np.exp(log_std) * eps
    scales = action_scales(mean.shape[-1] // 2, r_max)
    return raw, squash(raw, r_max), float(log_prob_of_raw(mean, log_std, raw, scales))


def deterministic_action(mean, r_max: float) -> np.ndarray:
    return squash(np.asarray(mean, dtype=float), r_max)


# -- advantages --------------------------------------------------------------


def gae(rewards, values, dones, gamma: float, lam: float, bootstrap_value: float = 0.0):
    """Standard GAE recursion; returns (advantages, returns = adv + values)."""
    rewards = np.asarray(rewards, dtype=float)
    values = np.asarray(values, dtype=float)
    dones = np.asarray(dones, dtype=bool)
    if not (len(rewards) == len(values) == len(dones)):
        raise ValueError("rewards, values, dones must have equal length")
    t_max = len(rewards)
    adv = np.zeros(t_max)
    last = 0.0
    for t in range(t_max - 1, -1, -1):
        nonterm = 0.0 if dones[t] else 1.0
        next_v = values[t + 1] if t + 1 < t_max else bootstrap_value
        delta = rewards[t] + gamma * next_v * nonterm - values[t]
        last = delta + gamma * lam * nonterm * last
        adv[t] = last
    return adv, adv + values


def paper_literal_advantage(rewards, values):
    """One-step, no-bootstrap form A_t = r_t - V(s_t)."""
    adv = np.asarray(rewards, dtype=float) - np.asarray(values, dtype=float)
    return adv, adv + np.asarray(values, dtype=float)


class RolloutBuffer:
    """On-policy storage for exactly one update's worth of steps."""

    def __init__(self, capacity: int, obs_dim: int, act_dim: int):
        self.capacity = capacity
        self.obs = np.zeros((capacity, obs_dim))
        self.raw = np.zeros((capacity, act_dim))
        self.log_prob = np.zeros(capacity)
        self.rewards = np.zeros(capacity)
        self.values = np.zeros(capacity)
        self.dones = np.zeros(capacity, dtype=bool)
        self.ptr = 0

    def add(self, obs, raw, log_prob, reward, value, done) -> None:
        if self.ptr >= self.capacity:
            raise RuntimeError("rollout buffer full")
        i = self.ptr
        self.obs[i] = obs
        self.raw[i] = raw
        self.log_prob[i] = log_prob
        self.rewards[i] = reward
        self.values[i] = value
        self.dones[i] = done
        self.ptr += 1

    @property
    def full(self) -> bool:
        return self.ptr == self.capacity

    def clear(self) -> None:
        self.ptr = 0


# -- loss and gradients ------------------------------------------------------


def make_batch(buffer: RolloutBuffer, cfg: PpoConfig, scales: np.ndarray) -> dict:
    """Advantage computation + normalization; freezes everything the loss needs."""
    if not buffer.full:
        raise RuntimeError("buffer must be full before an update")
    if cfg.advantage == "gae":
        adv, ret = gae(buffer.rewards, buffer.values, buffer.dones, cfg.gamma_df, cfg.gae_lambda)
    else:
        adv, ret = paper_literal_advantage(buffer.rewards, buffer.values)
    adv = (adv - adv.mean()) / (adv.std() + 1e-8)
    return {
        "obs": buffer.obs.copy(),
        "raw": buffer.raw.copy(),
        "old_log_prob": buffer.log_prob.copy(),
        "adv": adv,
        "ret": ret,
        "jac": tanh_log_jacobian(buffer.raw, scales),
        "scales": np.asarray(scales, dtype=float),
    }


def _select(batch: dict, idx: np.ndarray) -> dict:
    return {k: (v if k == "scales" else v[idx]) for k, v in batch.items()}


def ppo_loss(params: PolicyParams, batch: dict, cfg: PpoConfig):
    """Clipped-surrogate + value + entropy loss; pure in (params, batch)."""
    out, _ = nets.mlp_forward(params.actor, batch["obs"])
    a = out.shape[1] // 2
    mean, ls_raw = out[:, :a], out[:, a:]
    log_std = np.clip(ls_raw, cfg.log_std_min, cfg.log_std_max)
    new_lp = gaussian_log_prob(mean, log_std, batch["raw"]) - batch["jac"]
    ratio = np.exp(new_lp - batch["old_log_prob"])
    clipped = np.clip(ratio, 1.0 - cfg.clip_eps, 1.0 + cfg.clip_eps)
    adv = batch["adv"]
    obj = np.minimum(ratio * adv, clipped * adv)
    policy_loss = -obj.mean()
    entropy = entropy_squashed(mean, log_std, batch["scales"]).mean()

    v_out, _ = nets.mlp_forward(params.critic, batch["obs"])
    v = v_out[:, 0]
    value_loss = np.mean((v - batch["ret"]) ** 2)

    loss = policy_loss + cfg.value_coef * value_loss - cfg.entropy_coef * entropy
    stats = {
        "loss": float(loss),
        "policy_loss": float(policy_loss),
        "value_loss": float(value_loss),
        "entropy": float(entropy),
        "approx_kl": float(np.mean(batch["old_log_prob"] - new_lp)),
        "clip_frac": float(np.mean(np.abs(ratio - 1.0) > cfg.clip_eps)),
    }
    return loss, stats


def ppo_loss_and_grads(params: PolicyParams, batch: dict, cfg: PpoConfig):
    """Loss plus hand-derived gradients in the layout of PolicyParams.all()."""
    n = batch["obs"].shape[0]
    out, acts_a = nets.mlp_forward(params.actor, batch["obs"])
    a = out.shape[1] // 2
    mean, ls_raw = out[:, :a], out[:, a:]
    log_std = np.clip(ls_raw, cfg.log_std_min, cfg.log_std_max)
    sigma = np.exp(log_std)
    z = (batch["raw"] - mean) / sigma
    gauss_lp = np.sum(-0.5 * z * z - log_std - HALF_LOG_2PI, axis=-1)
    new_lp = gauss_lp - batch["jac"]
    ratio = np.exp(new_lp - batch["old_log_prob"])
    clipped = np.clip(ratio, 1.0 - cfg.clip_eps, 1.0 + cfg.clip_eps)
    adv = batch["adv"]
    unclipped_term = ratio * adv
    clipped_term = clipped * adv
    obj = np.minimum(unclipped_term, clipped_term)
    policy_loss = -obj.mean()
    jac_exp, djac_dmean, djac_dlogstd = _jacobian_expectation(mean, log_std)
    entropy = float(np.mean(
        np.sum(log_std + 0.5 + HALF_LOG_2PI + np.log(batch["scales"]) + jac_exp, axis=-1)
    ))

    v_out, acts_c = nets.mlp_forward(params.critic, batch["obs"])
    v = v_out[:, 0]
    value_loss = np.mean((v - batch["ret"]) ** 2)
    loss = policy_loss + cfg.value_coef * value_loss - cfg.entropy_coef * entropy

    # d loss / d new_lp: follow the elementwise min, then clip saturation
    take_unclipped = unclipped_term <= clipped_term
    in_band = (ratio > 1.0 - cfg.clip_eps) & (ratio < 1.0 + cfg.clip_eps)
    dobj_dratio = np.where(take_unclipped, adv, adv * in_band)
    dl_dnewlp = -(1.0 / n) * dobj_dratio * ratio

    dmean = dl_dnewlp[:, None] * (z / sigma) - (cfg.entropy_coef / n) * djac_dmean
    dlogstd = (dl_dnewlp[:, None] * (z * z - 1.0)
               - (cfg.entropy_coef / n) * (1.0 + djac_dlogstd))
    ls_active = (ls_raw > cfg.log_std_min) & (ls_raw < cfg.log_std_max)
    dout = np.concatenate([dmean, dlogstd * ls_active], axis=1)
    grads_actor = nets.mlp_backward(params.actor, acts_a, dout)

    dv = (cfg.value_coef * 2.0 / n) * (v - batch["ret"])
    grads_critic = nets.mlp_backward(params.critic, acts_c, dv[:, None])

    stats = {
        "loss": float(loss),
        "policy_loss": float(policy_loss),
        "value_loss": float(value_loss),
        "entropy": float(entropy),
        "approx_kl": float(np.mean(batch["old_log_prob"] - new_lp)),
        "clip_frac": float(np.mean(np.abs(ratio - 1.0) > cfg.clip_eps)),
    }
    return loss, stats, grads_actor + grads_critic


def ppo_update(
    params: PolicyParams,
    buffer: RolloutBuffer,
    cfg: PpoConfig,
    optimizer: nets.Adam,
    rng: np.random.Generator,
    scales: np.ndarray,
) -> dict:
    """One PPO update over the full buffer; clears the buffer afterwards."""
    batch = make_batch(buffer, cfg, scales)
    t_max = buffer.capacity
    all_params = params.all()
    agg: dict[str, list] = {}
    grad_norms: list[tuple[float, float]] = []
    for _ in range(cfg.epochs_per_update):
        perm = rng.permutation(t_max)
        for start in range(0, t_max, cfg.minibatch_size):
            idx = perm[start:start + cfg.minibatch_size]
            loss, stats, grads = ppo_loss_and_grads(params, _select(batch, idx), cfg)
            if not np.isfinite(loss):
                raise NumericalError(f"non-finite loss in PPO update: {stats}")
            pre = nets.clip_by_global_norm(grads, cfg.max_grad_norm)
            grad_norms.append((pre, nets.global_norm(grads)))
            optimizer.step(all_params, grads)
            for k, val in stats.items():
                agg.setdefault(k, []).append(val)
    buffer.clear()
    summary = {k: float(np.mean(v)) for k, v in agg.items()}
    summary["grad_norm_pre_clip"] = float(np.mean([g[0] for g in grad_norms]))
    summary["grad_norm_post_clip"] = float(np.max([g[1] for g in grad_norms]))
    return summary


def grad_check(params: PolicyParams, batch: dict, cfg: PpoConfig, h: float = 1e-5) -> float:
    """Max relative error of analytic vs central finite-difference gradients."""
    _, _, grads = ppo_loss_and_grads(params, batch, cfg)
    worst = 0.0
    for p, g in zip(params.all(), grads):
        flat_g = g.reshape(-1)
        for i in range(p.size):
            orig = p.flat[i]
            p.flat[i] = orig + h
            up, _ = ppo_loss(params, batch, cfg)
            p.flat[i] = orig - h
            dn, _ = ppo_loss(params, batch, cfg)
            p.flat[i] = orig
            fd = (up - dn) / (2.0 * h)
            # absolute floor guards FD roundoff when the true gradient ~ 0
            rel = abs(flat_g[i] - fd) / max(abs(flat_g[i]) + abs(fd), 1e-4)
            worst = max(worst, rel)
    return worst


def make_synthetic_batch(
    params: PolicyParams, cfg: PpoConfig, rng: np.random.Generator, batch_size: int = 8
) -> dict:
    """Random but kink-free batch for gradient checking: ratios stay inside the
    clip band and log-stds away from their clamp bounds."""
    obs_dim = params.actor[0].shape[0]
    act_dim = params.actor[-1].shape[0] // 2
    obs = rng.standard_normal((batch_size, obs_dim))
    raw = 0.5 * rng.standard_normal((batch_size, act_dim))
    mean, log_std = policy_forward(params, obs, cfg)
    scales = action_scales(act_dim // 2, 25.0)
    jac = tanh_log_jacobian(raw, scales)
    new_lp = gaussian_log_prob(mean, log_std, raw) - jac
    old_lp = new_lp + rng.uniform(-0.05, 0.05, size=batch_size)
    adv = rng.standard_normal(batch_size)
    ret = rng.standard_normal(batch_size)
    return {"obs": obs, "raw": raw, "old_log_prob": old_lp, "adv": adv, "ret": ret,
            "jac": jac, "scales": scales}
