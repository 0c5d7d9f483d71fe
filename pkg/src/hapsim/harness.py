"""Training/evaluation orchestration, metrics persistence, checkpoints.

Every stream of randomness is derived from the master seed through labeled
SeedSequences, so a (config, seed) pair reproduces metrics byte for byte.
"""
from __future__ import annotations

import dataclasses
import json
import os
from dataclasses import dataclass

import numpy as np

from . import config as cfgmod
from . import nets, ppo
from .baselines import make_baseline
from .env import HapsEnv

CHECKPOINT_VERSION = 1

# labels for per-stream seed derivation
_PHASE = {"train": 0, "eval": 1, "baseline": 2, "policy": 3, "shuffle": 4}


def derive_seed(master: int, phase: str, *indices: int) -> np.random.SeedSequence:
    return np.random.SeedSequence((master, _PHASE[phase], *indices))


@dataclass
class EpisodeStats:
    mean_reward: float
    mean_fair_rate: float
    sum_throughput_mbps: float
    centroid_dist_m: np.ndarray  # (D,) per-HAPS mean over frames
    wind_mean_ms: float
    wind_max_ms: float
    floored_rates: int


@dataclass
class EvalStats:
    episodes: int
    mean_reward: float
    std_reward: float
    mean_throughput_mbps: float
    std_throughput_mbps: float


# -- metrics -----------------------------------------------------------------


class MetricsWriter:
    """Append-only delimited text, one header row, fixed float formatting."""

    def __init__(self, path, num_haps: int):
        self.path = path
        self.num_haps = num_haps
        self.columns = (
            ["episode", "phase", "scenario", "mean_reward", "mean_fair_rate",
             "sum_throughput_mbps"]
            + [f"dist_h{d}_m" for d in range(num_haps)]
            + ["wind_mean_ms", "wind_max_ms", "floored_rates"]
        )
        self._f = open(path, "w")
        self._f.write(",".join(self.columns) + "\n")

    def write(self, episode: int, phase: str, scenario, stats: EpisodeStats) -> None:
        row = [str(episode), phase, str(scenario),
               format(stats.mean_reward, ".10g"),
               format(stats.mean_fair_rate, ".10g"),
               format(stats.sum_throughput_mbps, ".10g")]
        row += [format(d, ".10g") for d in stats.centroid_dist_m]
        row += [format(stats.wind_mean_ms, ".10g"), format(stats.wind_max_ms, ".10g"),
                str(stats.floored_rates)]
        self._f.write(",".join(row) + "\n")
        self._f.flush()

    def close(self) -> None:
        self._f.close()


def read_metrics(path) -> list[dict]:
    rows = []
    with open(path) as f:
        header = f.readline().strip().split(",")
        for line in f:
            parts = line.rstrip("\n").split(",")
            if len(parts) != len(header):
                raise ValueError(f"malformed metrics row: {line!r}")
            row = {}
            for k, v in zip(header, parts):
                if k in ("phase", "scenario"):
                    row[k] = v
                elif k in ("episode", "floored_rates"):
                    row[k] = int(v)
                else:
                    row[k] = float(v)
            rows.append(row)
    return rows


# -- checkpoints ---------------------------------------------------------------


def save_checkpoint(path, params: ppo.PolicyParams, run_cfg: cfgmod.RunConfig, extra: dict | None = None) -> None:
    meta = {
        "version": CHECKPOINT_VERSION,
        "config_hash": cfgmod.config_hash(run_cfg),
        "config": cfgmod.to_dict(run_cfg),
        "actor_shapes": [list(p.shape) for p in params.actor],
        "critic_shapes": [list(p.shape) for p in params.critic],
        **(extra or {}),
    }
    arrays = {f"actor_{i}": p for i, p in enumerate(params.actor)}
    arrays.update({f"critic_{i}": p for i, p in enumerate(params.critic)})
    np.savez(path, meta=json.dumps(meta, sort_keys=True), **arrays)


def load_checkpoint(path, expect_cfg: cfgmod.RunConfig | None = None):
    """Returns (params, run_cfg, meta); verifies shapes and the config hash."""
    with np.load(path, allow_pickle=False) as data:
        meta = json.loads(str(data["meta"]))
        if meta.get("version") != CHECKPOINT_VERSION:
            raise ValueError(f"unsupported checkpoint version {meta.get('version')}")
        actor = [data[f"actor_{i}"] for i in range(len(meta["actor_shapes"]))]
        critic = [data[f"critic_{i}"] for i in range(len(meta["critic_shapes"]))]
    for p, shape in zip(actor + critic, meta["actor_shapes"] + meta["critic_shapes"]):
        if list(p.shape) != shape:
            raise ValueError(f"checkpoint shape mismatch: {p.shape} vs {shape}")
    run_cfg = cfgmod.from_dict(meta["config"])
    if cfgmod.config_hash(run_cfg) != meta["config_hash"]:
        raise ValueError("checkpoint config hash does not match its embedded config")
    if expect_cfg is not None and cfgmod.config_hash(expect_cfg) != meta["config_hash"]:
        raise ValueError("checkpoint was trained under a different config (hash mismatch)")
    return ppo.PolicyParams(actor=actor, critic=critic), run_cfg, meta


# -- rollouts ------------------------------------------------------------------


def _accumulate(infos: list[dict], num_haps: int) -> EpisodeStats:
    rewards = np.array([i["reward"] for i in infos])
    fair = np.array([i["fair_rate"] for i in infos])
    thr = np.array([i["sum_throughput_mbps"] for i in infos])
    dist = np.stack([i["centroid_dist_m"] for i in infos])
    wind = np.stack([np.linalg.norm(np.atleast_2d(i["wind"]), axis=-1).mean() for i in infos])
    return EpisodeStats(
        mean_reward=float(rewards.mean()),
        mean_fair_rate=float(fair.mean()),
        sum_throughput_mbps=float(thr.mean()),
        centroid_dist_m=dist.mean(axis=0),
        wind_mean_ms=float(wind.mean()),
        wind_max_ms=float(wind.max()),
        floored_rates=int(sum(i["floored_rates"] for i in infos)),
    )


def collect_episode(
    env: HapsEnv,
    params: ppo.PolicyParams,
    ppo_cfg: ppo.PpoConfig,
    buffer: ppo.RolloutBuffer,
    rng: np.random.Generator,
    scenario,
    seed,
) -> EpisodeStats:
    """One on-policy episode into the buffer; returns its summary stats."""
    obs = env.reset(scenario=scenario, seed=seed)
    infos = []
    done = False
    while not done:
        mean, log_std = ppo.policy_forward(params, obs.vector, ppo_cfg)
        raw, action, log_prob = ppo.sample_action(mean, log_std, rng, env.cfg.r_max)
        value = ppo.value_forward(params, obs.vector)
        next_obs, reward, done, info = env.step(action)
        buffer.add(obs.vector, raw, log_prob, reward, value, done)
        infos.append(info)
        obs = next_obs
    return _accumulate(infos, env.cfg.area.num_haps)


def run_policy_episode(env: HapsEnv, params: ppo.PolicyParams, ppo_cfg: ppo.PpoConfig, scenario, seed) -> EpisodeStats:
    """Deterministic (mean-action) episode, no exploration."""
    obs = env.reset(scenario=scenario, seed=seed)
    infos = []
    done = False
    while not done:
        mean, _ = ppo.policy_forward(params, obs.vector, ppo_cfg)
        obs, _, done, info = env.step(ppo.deterministic_action(mean, env.cfg.r_max))
        infos.append(info)
    return _accumulate(infos, env.cfg.area.num_haps)


def run_scripted_episode(env: HapsEnv, policy, scenario, seed) -> EpisodeStats:
    env.reset(scenario=scenario, seed=seed)
    infos = []
    done = False
    while not done:
        _, _, done, info = env.step(policy.act(env))
        infos.append(info)
    return _accumulate(infos, env.cfg.area.num_haps)


def _summarize(stats: list[EpisodeStats]) -> EvalStats:
    r = np.array([s.mean_reward for s in stats])
    t = np.array([s.sum_throughput_mbps for s in stats])
    return EvalStats(
        episodes=len(stats),
        mean_reward=float(r.mean()),
        std_reward=float(r.std()),
        mean_throughput_mbps=float(t.mean()),
        std_throughput_mbps=float(t.std()),
    )


def evaluate_policy(
    run_cfg: cfgmod.RunConfig,
    params: ppo.PolicyParams,
    scenario,
    episodes: int,
    writer: MetricsWriter | None = None,
    episode_label: int = 0,
) -> EvalStats:
    if episodes < 1:
        raise ValueError("evaluation needs episodes >= 1")
    env = HapsEnv(run_cfg.env_config())
    sc_idx = scenario if isinstance(scenario, int) else 0
    stats = []
    for k in range(episodes):
        seed = derive_seed(run_cfg.master_seed, "eval", sc_idx, k)
        s = run_policy_episode(env, params, run_cfg.ppo, scenario, seed)
        stats.append(s)
        if writer is not None:
            writer.write(episode_label, "eval", scenario, s)
    return _summarize(stats)


def evaluate_baseline(run_cfg: cfgmod.RunConfig, name: str, scenario, episodes: int) -> EvalStats:
    """Baselines share the eval seed stream, so comparisons are paired."""
    if episodes < 1:
        raise ValueError("evaluation needs episodes >= 1")
    if name == "static":
        run_cfg = dataclasses.replace(run_cfg, env={**run_cfg.env, "wind_affects_haps": False})
    env = HapsEnv(run_cfg.env_config())
    policy_rng = np.random.default_rng(derive_seed(run_cfg.master_seed, "baseline", 7))
    policy = make_baseline(name, policy_rng)
    sc_idx = scenario if isinstance(scenario, int) else 0
    stats = [
        run_scripted_episode(env, policy, scenario, derive_seed(run_cfg.master_seed, "eval", sc_idx, k))
        for k in range(episodes)
    ]
    return _summarize(stats)


# -- training ------------------------------------------------------------------


@dataclass
class TrainResult:
    metrics_path: str
    final_checkpoint: str
    best_checkpoint: str
    episodes: int
    best_eval_reward: float


def train_run(run_cfg: cfgmod.RunConfig, out_dir, progress=None) -> TrainResult:
    """Full training protocol: random-init episodes, periodic deterministic
    evaluation on the preset scenarios, continuous metrics, checkpoints."""
    os.makedirs(out_dir, exist_ok=True)
    cfgmod.save(run_cfg, os.path.join(out_dir, "config.json"))

    env_cfg = run_cfg.env_config()
    env = HapsEnv(env_cfg)
    net_cfg = ppo.NetConfig(obs_dim=env_cfg.obs_dim, action_dim=env_cfg.action_dim)
    pcfg = run_cfg.ppo
    params = ppo.init_policy(
        net_cfg, np.random.default_rng(derive_seed(run_cfg.master_seed, "policy", 0)),
        log_std_init=pcfg.log_std_init,
    )
    optimizer = nets.Adam(params.all(), lr=pcfg.lr, beta1=pcfg.adam_beta1,
                          beta2=pcfg.adam_beta2, eps=pcfg.adam_eps)
    action_rng = np.random.default_rng(derive_seed(run_cfg.master_seed, "policy", 1))
    shuffle_rng = np.random.default_rng(derive_seed(run_cfg.master_seed, "shuffle", 0))
    buffer = ppo.RolloutBuffer(pcfg.rollout_frames, env_cfg.obs_dim, env_cfg.action_dim)
    scales = ppo.action_scales(env_cfg.area.num_haps, env_cfg.r_max)

    metrics_path = os.path.join(out_dir, "metrics.csv")
    writer = MetricsWriter(metrics_path, env_cfg.area.num_haps)
    final_path = os.path.join(out_dir, "checkpoint_final.npz")
    best_path = os.path.join(out_dir, "checkpoint_best.npz")
    best_eval = -np.inf

    try:
        for episode in range(run_cfg.episodes):
            ep_seed = derive_seed(run_cfg.master_seed, "train", episode)
            stats = collect_episode(env, params, pcfg, buffer, action_rng, "random", ep_seed)
            try:
                update_stats = ppo.ppo_update(params, buffer, pcfg, optimizer, shuffle_rng, scales)
            except ppo.NumericalError:
                _dump_diagnostics(out_dir, episode, params, stats)
                raise
            writer.write(episode, "train", "random", stats)

            if (episode + 1) % run_cfg.eval_every == 0 or episode == run_cfg.episodes - 1:
                scores = [
                    evaluate_policy(run_cfg, params, sc, run_cfg.eval_episodes,
                                    writer=writer, episode_label=episode).mean_reward
                    for sc in run_cfg.eval_scenarios
                ]
                mean_eval = float(np.mean(scores))
                if mean_eval > best_eval:
                    best_eval = mean_eval
                    save_checkpoint(best_path, params, run_cfg,
                                    {"episode": episode, "eval_reward": mean_eval})
            if progress is not None:
                progress(episode, stats, update_stats)
    finally:
        writer.close()

    save_checkpoint(final_path, params, run_cfg, {"episode": run_cfg.episodes - 1})
    if not os.path.exists(best_path):  # eval never ran (eval_every > episodes)
        save_checkpoint(best_path, params, run_cfg, {"episode": run_cfg.episodes - 1})
    return TrainResult(
        metrics_path=metrics_path,
        final_checkpoint=final_path,
        best_checkpoint=best_path,
        episodes=run_cfg.episodes,
        best_eval_reward=float(best_eval),
    )


def _dump_diagnostics(out_dir, episode: int, params: ppo.PolicyParams, stats: EpisodeStats) -> None:
    dump = {
        "episode": episode,
        "mean_reward": stats.mean_reward,
        "mean_fair_rate": stats.mean_fair_rate,
        "param_abs_max": [float(np.max(np.abs(p))) for p in params.all()],
        "param_finite": [bool(np.all(np.isfinite(p))) for p in params.all()],
    }
    with open(os.path.join(out_dir, "numerical_abort.json"), "w") as f:
        json.dump(dump, f, indent=2)
