"""Wind-disturbed HAPS base-station positioning simulator and PPO trainer."""

from .channel import RadioConfig
from .env import EnvConfig, EpisodeConfig, HapsEnv, Observation, ObsConfig, RewardConfig
from .mobility import Action, AreaConfig, WorldState
from .ppo import NetConfig, PolicyParams, PpoConfig, RolloutBuffer
from .wind import WindConfig, WindState

__all__ = [
    "Action",
    "AreaConfig",
    "EnvConfig",
    "EpisodeConfig",
    "HapsEnv",
    "NetConfig",
    "Observation",
    "ObsConfig",
    "PolicyParams",
    "PpoConfig",
    "RadioConfig",
    "RewardConfig",
    "RolloutBuffer",
    "WindConfig",
    "WindState",
    "WorldState",
]

__version__ = "0.1.0"
