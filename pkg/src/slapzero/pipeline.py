"""Self-play reinforcement learning loop: game generation, the replay buffer
in its three storage modes, the training schedule and the adaptive learning
rate multiplier."""
from __future__ import annotations

import json
import os
import time
from collections import deque
from dataclasses import dataclass, field
from typing import Optional

import numpy as np

from . import board as board_mod
from . import symmetry
from .board import BoardConfig, GameState, Status
from .mcts import (MctsAgent, NetEvaluator, SearchConfig, move_probs,
                   run_playouts, selfplay_move)
from .net import (PolicyValueNet, Trainer, TrainHyper, save_checkpoint,
                  validation_loss)
from .seeding import sub_rng

MODES = ("augment8", "slap", "slap_cc")


@dataclass
class TrainingSample:
    planes: np.ndarray
    pi: np.ndarray
    z: float


class ReplayBuffer:
    """Bounded FIFO of training samples; eviction is strictly oldest-first."""

    def __init__(self, capacity: int):
        if capacity <= 0:
            raise ValueError("capacity must be positive")
        self._items: deque[TrainingSample] = deque(maxlen=capacity)
        self.total_pushed = 0

    @property
    def capacity(self) -> int:
        return self._items.maxlen

    def __len__(self):
        return len(self._items)

    def push(self, sample: TrainingSample):
        self._items.append(sample)
        self.total_pushed += 1

    def set_capacity(self, capacity: int):
        """Resize, keeping the newest entries."""
        self._items = deque(self._items, maxlen=capacity)

    def sample_batch(self, batch_size: int, rng: np.random.Generator):
        idx = rng.integers(0, len(self._items), size=batch_size)
        picked = [self._items[int(i)] for i in idx]
        states = np.stack([s.planes for s in picked])
        pis = np.stack([s.pi for s in picked])
        zs = np.array([s.z for s in picked], dtype=np.float32)
        return states, pis, zs

    def items(self):
        return list(self._items)


@dataclass
class RlSchedule:
    games_total: int = 250
    steps_per_iteration: int = 10
    selfplay_games_per_iteration: int = 1
    batch_size: int = 512
    initial_capacity: int = 10000
    late_capacity: Optional[int] = None
    capacity_switch_game: int = 1000
    lr_check_interval: int = 100
    checkpoint_interval: int = 100

    def __post_init__(self):
        if self.initial_capacity <= 0 or self.lr_check_interval <= 0:
            raise ValueError("capacities and cadence must be positive")


def default_schedule(mode: str, games_total: int) -> RlSchedule:
    """Buffer plan: canonical storage runs an 8x smaller buffer."""
    if mode == "slap":
        return RlSchedule(games_total=games_total, initial_capacity=1250,
                          late_capacity=5000)
    return RlSchedule(games_total=games_total, initial_capacity=10000,
                      late_capacity=4000)


@dataclass
class LrAdaptState:
    history: list[float] = field(default_factory=list)
    lr_multiplier: float = 1.0
    min_history: int = 5


def adapt_lr(state: LrAdaptState, new_loss: float) -> bool:
    """Halve the multiplier when the new validation loss breaks the 3-sigma
    band of the prior history; returns True if halved."""
    halved = False
    if len(state.history) >= state.min_history:
        mean = float(np.mean(state.history))
        std = float(np.std(state.history))
        if new_loss > mean + 3.0 * std:
            state.lr_multiplier /= 2.0
            halved = True
    state.history.append(new_loss)
    return halved


def run_selfplay_game(evaluator, search_cfg: SearchConfig,
                      board_cfg: BoardConfig, rng: np.random.Generator):
    """One complete self-play game; returns (samples with z assigned, winner)."""
    state = board_mod.new_game(board_cfg)
    history = []  # (planes, pi, player)
    while state.status is Status.ONGOING:
        counts = run_playouts(state, evaluator, search_cfg, rng=rng,
                              root_noise=True)
        pi = move_probs(counts, search_cfg.temperature).astype(np.float32)
        history.append((board_mod.encode_planes(state), pi, state.to_move))
        state = state.play(selfplay_move(pi, rng))
    winner = state.winner
    samples = []
    for planes, pi, player in history:
        if winner is None:
            z = 0.0
        else:
            z = 1.0 if player == winner else -1.0
        samples.append(TrainingSample(planes, pi, z))
    return samples, winner


def store(buffer: ReplayBuffer, samples: list[TrainingSample], mode: str):
    """augment8: 8 symmetry images per sample; slap: one canonical entry;
    slap_cc: 8 images extended to 8 planes."""
    if mode not in MODES:
        raise ValueError(f"unknown storage mode {mode!r}")
    for sample in samples:
        if mode == "slap":
            result = symmetry.slap(sample.planes)
            pi = symmetry.transform_policy(sample.pi, result.transform)
            buffer.push(TrainingSample(result.canonical, pi, sample.z))
        else:
            for planes_g, pi_g in symmetry.augment_8(sample.planes, sample.pi):
                if mode == "slap_cc":
                    planes_g = symmetry.extend_planes_cc(planes_g)
                buffer.push(TrainingSample(planes_g, pi_g, sample.z))


class SelfPlayPipeline:
    """Single-trainer loop: one self-play game then a block of optimisation
    steps per policy iteration, with periodic lr adaptation and checkpoints."""

    def __init__(self, board_cfg: BoardConfig, net: PolicyValueNet,
                 trainer: Trainer, search_cfg: SearchConfig,
                 schedule: RlSchedule, mode: str, root_seed: int,
                 run_dir=None, validation_arrays=None):
        if mode not in MODES:
            raise ValueError(f"unknown mode {mode!r}")
        self.board_cfg = board_cfg
        self.net = net
        self.trainer = trainer
        self.search_cfg = search_cfg
        self.schedule = schedule
        self.mode = mode
        self.root_seed = root_seed
        self.run_dir = run_dir
        self.validation_arrays = validation_arrays
        self.buffer = ReplayBuffer(schedule.initial_capacity)
        self.lr_state = LrAdaptState()
        self.games_played = 0
        self.evaluator = NetEvaluator(net, use_slap=(mode == "slap"),
                                      extend_cc=(mode == "slap_cc"))
        self.train_rng = sub_rng(root_seed, "train-batches")
        if run_dir is not None:
            os.makedirs(os.path.join(run_dir, "checkpoints"), exist_ok=True)
            os.makedirs(os.path.join(run_dir, "eval"), exist_ok=True)
        self.metrics: list[dict] = []

    def policy_iteration(self) -> dict:
        schedule = self.schedule
        game_index = self.games_played
        game_rng = sub_rng(self.root_seed, "selfplay", game_index)
        t0 = time.perf_counter()
        samples, winner = run_selfplay_game(self.evaluator, self.search_cfg,
                                            self.board_cfg, game_rng)
        seconds_per_move = (time.perf_counter() - t0) / max(1, len(samples))
        store(self.buffer, samples, self.mode)
        self.games_played += 1

        if (schedule.late_capacity is not None
                and self.games_played == schedule.capacity_switch_game):
            self.buffer.set_capacity(schedule.late_capacity)

        record = {
            "game": self.games_played,
            "game_moves": len(samples),
            "buffer_size": len(self.buffer),
            "lr_multiplier": self.lr_state.lr_multiplier,
            "loss": None, "value_loss": None, "policy_loss": None,
            "entropy": None, "grad_norm": None,
        }
        if len(self.buffer) >= schedule.batch_size:
            step_metrics = []
            for _ in range(schedule.steps_per_iteration):
                batch = self.buffer.sample_batch(schedule.batch_size,
                                                 self.train_rng)
                step_metrics.append(self.trainer.step(*batch))
            for key in ("loss", "value_loss", "policy_loss", "entropy",
                        "grad_norm"):
                record[key] = float(np.mean([getattr(m, key)
                                             for m in step_metrics]))

        if (self.validation_arrays is not None
                and self.games_played % schedule.lr_check_interval == 0):
            vloss = validation_loss(self.net, *self.validation_arrays)
            adapt_lr(self.lr_state, vloss)
            self.trainer.hyper.lr_multiplier = self.lr_state.lr_multiplier
            record["validation_loss"] = vloss
            record["lr_multiplier"] = self.lr_state.lr_multiplier

        self.metrics.append(record)
        if self.run_dir is not None:
            with open(os.path.join(self.run_dir, "metrics.jsonl"), "a") as f:
                f.write(json.dumps(record, sort_keys=True) + "\n")
            with open(os.path.join(self.run_dir, "timings.jsonl"), "a") as f:
                f.write(json.dumps({"game": self.games_played,
                                    "seconds_per_move": seconds_per_move}) + "\n")
        return record

    def run(self):
        while self.games_played < self.schedule.games_total:
            self.policy_iteration()
            if (self.run_dir is not None
                    and self.games_played % self.schedule.checkpoint_interval == 0):
                self._checkpoint()
        if self.run_dir is not None:
            self._checkpoint()
        return self.metrics

    def _checkpoint(self):
        path = os.path.join(self.run_dir, "checkpoints",
                            f"step-{self.trainer.step_count:06d}.bin")
        save_checkpoint(self.net, self.trainer.hyper,
                        self.trainer.step_count, path)
