"""Scenario configuration: a single strict tree of named sections.

Configs load from YAML (JSON parses too); unknown keys anywhere in the
tree are reported as errors with their full field path.
"""

from __future__ import annotations

import dataclasses
import math
import os
from dataclasses import dataclass, field, fields

import yaml

from .adversary import AttackSpec
from .adjudication import NoiseModel
from .learner import DPConfig
from .network import LatencyModel
from .reputation import ReputationParams
from .selection import SelectionWeights

SEED_ENV_VAR = "NEXUS_SIM_SEED"

SELECTION_STRATEGIES = ("reputation", "random", "capability", "load_balanced")


@dataclass(frozen=True)
class PoolConfig:
    """Node population: GPU nodes train, CPU nodes vote and gossip."""

    gpu: int = 20
    cpu: int = 80

    def __post_init__(self):
        if self.gpu < 1:
            raise ValueError("need at least one GPU node")

    @property
    def total(self) -> int:
        return self.gpu + self.cpu


@dataclass(frozen=True)
class LearnerConfig:
    classes: int = 10
    dim: int = 32
    n_examples: int = 4000
    class_separation: float = 4.0
    alpha_dir: float = 0.5
    val_fraction: float = 0.1
    test_fraction: float = 0.2
    num_val_shards: int = 16


@dataclass(frozen=True)
class TimingConfig:
    base_train_s: float = 5.0        # honest local-training time at cap=1.0
    collect_timeout_s: float = 0.0   # 0 = derive as 3x the benign median round
    gossip_base_period_s: float = 2.0
    gossip_rtt_factor: float = 12.0  # seconds of period added per second of RTT


@dataclass(frozen=True)
class SybilConfig:
    count: int = 0
    injection_round: int = 0
    puzzle_admission_ratio: float = 0.7   # share of sybils affording the puzzle
    stake_multiplier: float = 0.5         # adversary stake vs honest total


@dataclass(frozen=True)
class ScenarioConfig:
    seed: int
    rounds: int = 30
    k_train: int = 10
    min_updates: int = 0                  # 0 = ceil(k_selected / 2)
    pools: PoolConfig = field(default_factory=PoolConfig)
    learner: LearnerConfig = field(default_factory=LearnerConfig)
    reputation: ReputationParams = field(default_factory=ReputationParams)
    selection_weights: SelectionWeights = field(default_factory=SelectionWeights)
    selection_strategy: str = "reputation"
    dp: DPConfig = field(default_factory=lambda: DPConfig(noise_multiplier=0.0))
    noise: NoiseModel = field(default_factory=NoiseModel)
    m_evaluators: int = 3
    vote_eta: float = 0.15                # honest consensus-vote error rate
    attack: AttackSpec = field(default_factory=AttackSpec)
    sybil: SybilConfig = field(default_factory=SybilConfig)
    churn_rate_per_min: float = 0.0
    round_minutes: float = 1.0            # simulated minutes per round (churn clock)
    latency: LatencyModel = field(default_factory=LatencyModel)
    timing: TimingConfig = field(default_factory=TimingConfig)
    aggregator: str = "rep_fedavg"
    consensus_weighting: str = "reputation"
    quorum_class: str = "fl_round_result"
    k_l: int = 10
    domain: str = "vision"
    scan_interval: int = 0                # rounds between collusion scans; 0 = off
    scan_window: int = 60
    gossip_fanout: int = 6
    gossip_ttl: int = 7
    gossip_queue_capacity: int = 64
    dht_k: int = 20
    dht_alpha: int = 3
    record_gossip: bool = True
    uniform_caps: bool = False
    single_region: bool = False
    episode_rounds: int = 0          # rotate in a fresh task every N rounds; 0 = never
    founder_warm_obs: int = 0        # prior adjudications credited to founding nodes
    validation_gate: bool = True     # False = plain FL loop without the quorum gate

    def __post_init__(self):
        if self.rounds < 0:
            raise ValueError("rounds must be >= 0")
        if self.k_train < 1:
            raise ValueError("k_train must be >= 1")
        if self.selection_strategy not in SELECTION_STRATEGIES:
            raise ValueError(f"unknown selection strategy {self.selection_strategy!r}")
        from .baselines import AGGREGATORS, CONSENSUS_WEIGHTINGS

        if self.aggregator not in AGGREGATORS:
            raise ValueError(f"unknown aggregator {self.aggregator!r}")
        if self.consensus_weighting not in CONSENSUS_WEIGHTINGS:
            raise ValueError(f"unknown consensus weighting {self.consensus_weighting!r}")
        if not 0 <= self.vote_eta <= 0.5:
            raise ValueError("vote_eta must be in [0, 0.5]")
        if self.m_evaluators < 3 or self.m_evaluators % 2 == 0:
            raise ValueError("m_evaluators must be odd and >= 3")


class ConfigError(ValueError):
    """Validation failure, annotated with the offending field path."""


_SECTION_TYPES = {
    "pools": PoolConfig,
    "learner": LearnerConfig,
    "reputation": ReputationParams,
    "selection_weights": SelectionWeights,
    "dp": DPConfig,
    "noise": NoiseModel,
    "attack": AttackSpec,
    "sybil": SybilConfig,
    "latency": LatencyModel,
    "timing": TimingConfig,
}


def _build(cls, data: dict, path: str):
    if not isinstance(data, dict):
        raise ConfigError(f"{path}: expected a mapping, got {type(data).__name__}")
    allowed = {f.name: f for f in fields(cls)}
    kwargs = {}
    for key, value in data.items():
        if key not in allowed:
            raise ConfigError(f"{path}.{key}: unknown key")
        sub = _SECTION_TYPES.get(key)
        if sub is not None and key in _SECTION_TYPES:
            kwargs[key] = _build(sub, value, f"{path}.{key}")
        elif isinstance(value, str) and value in ("inf", ".inf"):
            kwargs[key] = math.inf
        elif isinstance(value, list):
            kwargs[key] = tuple(value)
        else:
            kwargs[key] = value
    try:
        return cls(**kwargs)
    except (TypeError, ValueError) as exc:
        raise ConfigError(f"{path}: {exc}") from exc


def from_dict(data: dict) -> ScenarioConfig:
    if "seed" not in data:
        raise ConfigError("scenario.seed: missing (a seed is mandatory)")
    return _build(ScenarioConfig, data, "scenario")


def load_config(path: str, seed_override: int | None = None) -> ScenarioConfig:
    """Load and validate a scenario file.

    Seed precedence: NEXUS_SIM_SEED environment variable, then an explicit
    override (e.g. a --seed flag), then the config file.
    """
    with open(path) as fh:
        data = yaml.safe_load(fh) or {}
    env_seed = os.environ.get(SEED_ENV_VAR)
    if env_seed is not None:
        data["seed"] = int(env_seed)
    elif seed_override is not None:
        data["seed"] = seed_override
    elif "seed" not in data:
        raise ConfigError("scenario.seed: missing (a seed is mandatory)")
    return from_dict(data)


def to_dict(cfg) -> dict:
    return dataclasses.asdict(cfg)
