"""Run configuration: nested blocks, JSON (de)serialization, fingerprinting.

The on-disk format mirrors the dataclass nesting:

    {"wind": {...}, "area": {...}, "radio": {...},
     "env": {...}, "ppo": {...},
     "master_seed": 0, "episodes": 12000, ...}

Partial files are fine; anything omitted keeps its default.  Unknown keys
are rejected so typos fail loudly.
"""
from __future__ import annotations

import dataclasses
import hashlib
import json
from dataclasses import dataclass, field, fields

from .channel import RadioConfig
from .env import EnvConfig, EpisodeConfig, ObsConfig, RewardConfig
from .mobility import AreaConfig
from .ppo import PpoConfig
from .wind import WindConfig

SCHEMA_VERSION = 1


class ConfigError(ValueError):
    """Malformed or inconsistent run configuration."""


@dataclass
class RunConfig:
    wind: WindConfig = field(default_factory=WindConfig)
    area: AreaConfig = field(default_factory=AreaConfig)
    radio: RadioConfig = field(default_factory=RadioConfig)
    env: dict = field(default_factory=dict)   # flat env block, see _ENV_FIELDS
    ppo: PpoConfig = field(default_factory=PpoConfig)
    master_seed: int = 0
    episodes: int = 12000
    eval_every: int = 500
    eval_scenarios: tuple = (1, 2, 3, 4)
    eval_episodes: int = 1
    output_dir: str = "runs/default"

    def __post_init__(self):
        if self.eval_every < 1:
            raise ConfigError("eval_every must be >= 1")
        if self.episodes < 1:
            raise ConfigError("episodes must be >= 1")
        self.env = {**_ENV_DEFAULTS, **self.env}
        unknown = set(self.env) - set(_ENV_DEFAULTS)
        if unknown:
            raise ConfigError(f"unknown env keys: {sorted(unknown)}")

    def env_config(self) -> EnvConfig:
        e = self.env
        return EnvConfig(
            wind=self.wind,
            area=self.area,
            radio=self.radio,
            reward=RewardConfig(c_s=e["c_s"], c_m=e["c_m"]),
            episode=EpisodeConfig(frames_per_episode=e["frames_per_episode"], dt=e["dt"]),
            obs=ObsConfig(memory=e["memory"], sinr_clip_db=tuple(e["sinr_clip_db"])),
            r_max=e["r_max"],
            wind_affects_haps=e["wind_affects_haps"],
        )


_ENV_DEFAULTS = {
    "c_s": 0.25,
    "c_m": 50.0,
    "frames_per_episode": 128,
    "dt": 2.0,
    "memory": 1,
    "sinr_clip_db": [-20.0, 60.0],
    "r_max": 50.0,
    "wind_affects_haps": True,
}

_BLOCKS = {"wind": WindConfig, "area": AreaConfig, "radio": RadioConfig, "ppo": PpoConfig}


def _build_block(cls, data: dict, name: str):
    allowed = {f.name for f in fields(cls)}
    unknown = set(data) - allowed
    if unknown:
        raise ConfigError(f"unknown keys in [{name}]: {sorted(unknown)}")
    try:
        return cls(**data)
    except (TypeError, ValueError) as exc:
        raise ConfigError(f"bad [{name}] block: {exc}") from exc


def from_dict(data: dict) -> RunConfig:
    data = dict(data)
    data.pop("schema_version", None)
    kwargs = {}
    for name, cls in _BLOCKS.items():
        if name in data:
            kwargs[name] = _build_block(cls, data.pop(name), name)
    if "env" in data:
        kwargs["env"] = dict(data.pop("env"))
    top = {f.name for f in fields(RunConfig)}
    unknown = set(data) - top
    if unknown:
        raise ConfigError(f"unknown top-level keys: {sorted(unknown)}")
    if "eval_scenarios" in data:
        data["eval_scenarios"] = tuple(data["eval_scenarios"])
    try:
        return RunConfig(**kwargs, **data)
    except (TypeError, ValueError) as exc:
        raise ConfigError(str(exc)) from exc


def to_dict(cfg: RunConfig) -> dict:
    out = {"schema_version": SCHEMA_VERSION}
    for f in fields(RunConfig):
        v = getattr(cfg, f.name)
        if dataclasses.is_dataclass(v):
            out[f.name] = dataclasses.asdict(v)
        elif isinstance(v, tuple):
            out[f.name] = list(v)
        else:
            out[f.name] = v
    return out


def load(path) -> RunConfig:
    try:
        with open(path) as f:
            data = json.load(f)
    except OSError as exc:
        raise ConfigError(f"cannot read config {path}: {exc}") from exc
    except json.JSONDecodeError as exc:
        raise ConfigError(f"config {path} is not valid JSON: {exc}") from exc
    if not isinstance(data, dict):
        raise ConfigError("config root must be a JSON object")
    return from_dict(data)


def save(cfg: RunConfig, path) -> None:
    with open(path, "w") as f:
        json.dump(to_dict(cfg), f, indent=2, sort_keys=True)
        f.write("\n")


def config_hash(cfg: RunConfig) -> str:
    """Fingerprint of the blocks that define env semantics and net shapes.

    Run bookkeeping (seed, episode counts, output paths) is excluded so a
    checkpoint stays loadable for evaluation under any run schedule.
    """
    d = to_dict(cfg)
    canon = json.dumps(
        {k: d[k] for k in ("wind", "area", "radio", "env", "ppo", "schema_version")},
        sort_keys=True, separators=(",", ":"),
    )
    return hashlib.sha256(canon.encode()).hexdigest()[:16]
