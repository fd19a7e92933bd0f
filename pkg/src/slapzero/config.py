"""Run configuration: one schema-versioned JSON document covering every
tunable, with strict unknown-key rejection and lossless round-tripping."""
from __future__ import annotations

import json
from dataclasses import asdict, dataclass, field, fields

from .mcts import SearchConfig
from .net import NetConfig, TrainHyper
from .pipeline import MODES, RlSchedule, default_schedule

SCHEMA_VERSION = 1


class ConfigError(Exception):
    pass


@dataclass
class ModelConfig:
    extra_act_fc: bool = False
    Num_ResBlock: int = 0
    dropout: float = 0.0


@dataclass
class OptimizerConfig:
    SGD: bool = False
    lr: float = 1e-3
    L2: float = 1e-4
    batch_size: int = 512
    autoclip: bool = True
    clip_percentile: float = 10.0


@dataclass
class ScheduleConfig:
    steps_per_iteration: int = 10
    selfplay_games_per_iteration: int = 1
    initial_capacity: int | None = None  # None: buffer plan chosen by mode
    late_capacity: int | None = None
    capacity_switch_game: int = 1000
    lr_check_interval: int = 100
    checkpoint_interval: int = 100


@dataclass
class EvalConfig:
    tiers: list[int] = field(default_factory=lambda: [1000, 3000, 5000])
    games_per_tier: int = 10
    net_playouts: int = 400


@dataclass
class RunConfig:
    schema_version: int = SCHEMA_VERSION
    board_size: int = 8
    mode: str = "augment8"
    games: int = 250
    seed: int = 0
    model: ModelConfig = field(default_factory=ModelConfig)
    optimizer: OptimizerConfig = field(default_factory=OptimizerConfig)
    search: SearchConfig = field(default_factory=SearchConfig)
    schedule: ScheduleConfig = field(default_factory=ScheduleConfig)
    eval: EvalConfig = field(default_factory=EvalConfig)

    def __post_init__(self):
        if self.mode not in MODES:
            raise ConfigError(f"mode must be one of {MODES}")
        if self.schema_version != SCHEMA_VERSION:
            raise ConfigError(f"unsupported schema version {self.schema_version}")

    # -- derived views ----------------------------------------------------
    def net_config(self) -> NetConfig:
        return NetConfig(board_size=self.board_size,
                         in_channels=8 if self.mode == "slap_cc" else 4,
                         num_res_blocks=self.model.Num_ResBlock,
                         extra_act_fc=self.model.extra_act_fc,
                         dropout=self.model.dropout)

    def train_hyper(self) -> TrainHyper:
        o = self.optimizer
        return TrainHyper(optimizer="sgd" if o.SGD else "adam", lr=o.lr,
                          l2=o.L2, batch_size=o.batch_size,
                          autoclip=o.autoclip,
                          clip_percentile=o.clip_percentile)

    def rl_schedule(self) -> RlSchedule:
        base = default_schedule(self.mode, self.games)
        s = self.schedule
        return RlSchedule(
            games_total=self.games,
            steps_per_iteration=s.steps_per_iteration,
            selfplay_games_per_iteration=s.selfplay_games_per_iteration,
            batch_size=self.optimizer.batch_size,
            initial_capacity=s.initial_capacity or base.initial_capacity,
            late_capacity=(s.late_capacity if s.late_capacity is not None
                           else base.late_capacity),
            capacity_switch_game=s.capacity_switch_game,
            lr_check_interval=s.lr_check_interval,
            checkpoint_interval=s.checkpoint_interval)

    # -- (de)serialization ------------------------------------------------
    def to_dict(self) -> dict:
        return asdict(self)

    def to_file(self, path):
        with open(path, "w") as f:
            json.dump(self.to_dict(), f, sort_keys=True, indent=2)
            f.write("\n")


def _build(cls, data: dict, path: str):
    known = {f.name: f for f in fields(cls)}
    unknown = set(data) - set(known)
    if unknown:
        raise ConfigError(f"unknown keys at {path or 'top level'}: "
                          f"{sorted(unknown)}")
    kwargs = {}
    nested = {"model": ModelConfig, "optimizer": OptimizerConfig,
              "search": SearchConfig, "schedule": ScheduleConfig,
              "eval": EvalConfig}
    for key, value in data.items():
        if key in nested and isinstance(value, dict):
            kwargs[key] = _build(nested[key], value, f"{path}{key}.")
        else:
            kwargs[key] = value
    return cls(**kwargs)


def from_dict(data: dict) -> RunConfig:
    if not isinstance(data, dict):
        raise ConfigError("config must be a JSON object")
    return _build(RunConfig, data, "")


def from_file(path) -> RunConfig:
    with open(path) as f:
        return from_dict(json.load(f))
