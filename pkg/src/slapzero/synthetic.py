"""Synthetic supervised benchmark: about-to-win generation, labeling, the
canonicalization-vs-augmentation A/B harness and the hyperparameter grid.
"""
from __future__ import annotations

import itertools
import json
import os
from dataclasses import dataclass, field
from typing import Optional

import numpy as np
import torch

from . import board as board_mod
from . import symmetry
from .board import BLACK, WHITE, BoardConfig, GameState
from .net import (NetConfig, PolicyValueNet, Trainer, TrainHyper,
                  validation_loss)
from .seeding import sub_rng, sub_seed

ABOUT_TO_WIN_PER_SET = 480
RANDOM_PER_SET = 1000


def enumerate_win_lines(n: int = 8, win_length: int = 5):
    """All 5-cell straight windows as tuples of flat indices."""
    if n < win_length:
        raise ValueError("board smaller than win length")
    return board_mod.winning_lines(n, win_length)


def gen_about_to_win_states(config: BoardConfig,
                            rng: np.random.Generator) -> list[GameState]:
    """One state per (winning line, removed stone): 4 black stones on the
    line plus 4 random white stones off the line, black to move."""
    n = config.size
    states = []
    all_cells = np.arange(n * n)
    for line in enumerate_win_lines(n, config.win_length):
        off_line = np.setdiff1d(all_cells, line)
        for removed in line:
            board = np.zeros((n, n), dtype=np.int8)
            for cell in line:
                if cell != removed:
                    board[cell // n, cell % n] = BLACK
            whites = rng.choice(off_line, size=4, replace=False)
            for cell in whites:
                board[cell // n, cell % n] = WHITE
            states.append(board_mod.from_board(config, board, BLACK))
    return states


def gen_random_states(config: BoardConfig, rng: np.random.Generator,
                      count: int = RANDOM_PER_SET,
                      stones_per_player: int = 4) -> list[GameState]:
    n = config.size
    states = []
    for _ in range(count):
        cells = rng.choice(n * n, size=2 * stones_per_player, replace=False)
        board = np.zeros((n, n), dtype=np.int8)
        for cell in cells[:stones_per_player]:
            board[cell // n, cell % n] = BLACK
        for cell in cells[stones_per_player:]:
            board[cell // n, cell % n] = WHITE
        states.append(board_mod.from_board(config, board, BLACK))
    return states


def winning_cells(state: GameState) -> list[int]:
    """Brute force: every empty cell that wins immediately for the mover."""
    cells = []
    n = state.size
    board = state.board
    for cell in state.legal_moves():
        r, c = divmod(int(cell), n)
        board[r, c] = state.to_move
        if board_mod._wins_through(board, r, c, state.to_move,
                                   state.config.win_length):
            cells.append(int(cell))
        board[r, c] = 0
    return cells


@dataclass
class LabeledState:
    state: GameState
    pi: np.ndarray
    value: float


def label_state(state: GameState, rng: np.random.Generator) -> LabeledState:
    """Winning cells share probability 1/k and value 1; otherwise value 0 and
    a random normalized distribution over the empty cells."""
    n = state.size
    pi = np.zeros(n * n, dtype=np.float32)
    wins = winning_cells(state)
    if wins:
        pi[wins] = 1.0 / len(wins)
        value = 1.0
    else:
        empties = state.legal_moves()
        weights = rng.uniform(size=len(empties))
        pi[empties] = (weights / weights.sum()).astype(np.float32)
        value = 0.0
    return LabeledState(state, pi, value)


def build_mixed_set(config: BoardConfig, seed: int) -> list[LabeledState]:
    """480 about-to-win states plus 1000 purely random states, labeled."""
    gen_rng = sub_rng(seed, "generate")
    label_rng = sub_rng(seed, "label")
    states = gen_about_to_win_states(config, gen_rng)
    states += gen_random_states(config, gen_rng)
    return [label_state(s, label_rng) for s in states]


@dataclass
class Dataset:
    config: BoardConfig
    train: list[LabeledState]
    validation: list[LabeledState]
    seeds: tuple[int, ...]
    split_seed: int


def build_dataset(config: BoardConfig, seeds, split_seed: int = 0,
                  validation_fraction: float = 0.15) -> Dataset:
    seeds = tuple(seeds)
    if len(set(seeds)) != len(seeds):
        raise ValueError("seeds must be distinct")
    samples: list[LabeledState] = []
    for seed in seeds:
        samples.extend(build_mixed_set(config, seed))
    order = np.random.default_rng(split_seed).permutation(len(samples))
    n_val = round(validation_fraction * len(samples))
    validation = [samples[i] for i in order[:n_val]]
    train = [samples[i] for i in order[n_val:]]
    return Dataset(config, train, validation, seeds, split_seed)


def encode_arrays(samples: list[LabeledState], mode: str):
    """Materialize (states, pis, values) arrays for one storage mode.

    raw      -- 4-plane encodings, one entry per sample
    slap     -- canonical 4-plane encodings, policy transformed along
    augment8 -- all 8 symmetry images per sample
    slap_cc  -- all 8 symmetry images, extended to 8 planes
    cc_raw   -- one entry per sample, extended to 8 planes (validation side)
    """
    states, pis, values = [], [], []
    for sample in samples:
        planes = board_mod.encode_planes(sample.state)
        if mode == "raw":
            states.append(planes)
            pis.append(sample.pi)
            values.append(sample.value)
        elif mode == "slap":
            result = symmetry.slap(planes)
            states.append(result.canonical)
            pis.append(symmetry.transform_policy(sample.pi, result.transform))
            values.append(sample.value)
        elif mode == "cc_raw":
            states.append(symmetry.extend_planes_cc(planes))
            pis.append(sample.pi)
            values.append(sample.value)
        elif mode in ("augment8", "slap_cc"):
            for planes_g, pi_g in symmetry.augment_8(planes, sample.pi):
                if mode == "slap_cc":
                    planes_g = symmetry.extend_planes_cc(planes_g)
                states.append(planes_g)
                pis.append(pi_g)
                values.append(sample.value)
        else:
            raise ValueError(f"unknown mode {mode!r}")
    return (np.asarray(states, dtype=np.float32),
            np.asarray(pis, dtype=np.float32),
            np.asarray(values, dtype=np.float32))


_TRAIN_MODE = {"slap": "slap", "augment8": "augment8", "slap_cc": "slap_cc"}
_VAL_MODE = {"slap": "slap", "augment8": "raw", "slap_cc": "cc_raw"}


@dataclass
class ConvergenceRecord:
    mode: str
    losses: list[tuple[int, float]] = field(default_factory=list)
    iterations_to: dict[float, Optional[int]] = field(default_factory=dict)
    final_loss: Optional[float] = None
    failed: bool = False
    label: str = ""

    def to_json(self) -> dict:
        return {
            "mode": self.mode,
            "label": self.label,
            "losses": [[i, l] for i, l in self.losses],
            "iterations_to": {str(k): v for k, v in self.iterations_to.items()},
            "final_loss": self.final_loss,
            "failed": self.failed,
        }


def supervised_run(dataset: Dataset, mode: str, hyper: TrainHyper,
                   iterations: int, seed: int,
                   net_config: NetConfig | None = None,
                   record_every: int = 10,
                   thresholds=(3.0, 2.9),
                   train_limit: int | None = None,
                   label: str = "") -> ConvergenceRecord:
    """Train one arm on with-replacement batches; validation loss every
    `record_every` iterations on the fixed held-out set."""
    train_samples = dataset.train
    if train_limit is not None:
        train_samples = train_samples[:train_limit]
    states, pis, values = encode_arrays(train_samples, _TRAIN_MODE[mode])
    val_states, val_pis, val_values = encode_arrays(dataset.validation,
                                                    _VAL_MODE[mode])
    if net_config is None:
        in_channels = 8 if mode == "slap_cc" else 4
        net_config = NetConfig(board_size=dataset.config.size,
                               in_channels=in_channels)
    net = PolicyValueNet(net_config, init_seed=sub_seed(seed, "init"))
    torch.manual_seed(sub_seed(seed, "torch") % 2 ** 63)
    trainer = Trainer(net, hyper)
    batch_rng = sub_rng(seed, "batch")
    record = ConvergenceRecord(mode=mode, label=label,
                               iterations_to={t: None for t in thresholds})
    for it in range(1, iterations + 1):
        idx = batch_rng.integers(0, len(states), size=hyper.batch_size)
        try:
            trainer.step(states[idx], pis[idx], values[idx])
        except FloatingPointError:
            record.failed = True
            break
        if it % record_every == 0:
            vloss = validation_loss(net, val_states, val_pis, val_values)
            record.losses.append((it, vloss))
            record.final_loss = vloss
            for t in thresholds:
                if record.iterations_to[t] is None and vloss <= t:
                    record.iterations_to[t] = it
    return record


GRID_SPEC = {
    "use_slap": (True, False),
    "extra_act_fc": (True, False),
    "l2": (1e-3, 1e-4, 1e-5),
    "num_res_blocks": (0, 5, 10, 20),
    "sgd": (True, False),
    "lr": (1e-1, 1e-2, 1e-3, 1e-4, 1e-5),
    "dropout": (0.0, 0.1, 0.2, 0.3, 0.4),
}


def grid_combinations(spec: dict | None = None) -> list[dict]:
    spec = spec or GRID_SPEC
    keys = list(spec)
    return [dict(zip(keys, combo))
            for combo in itertools.product(*(spec[k] for k in keys))]


def grid_driver(dataset: Dataset, combos: list[dict], iterations: int,
                seed: int = 0, out_dir=None) -> list[ConvergenceRecord]:
    """Run every configuration, isolate failures, rank by final loss."""
    records = []
    for i, combo in enumerate(combos):
        mode = "slap" if combo["use_slap"] else "augment8"
        hyper = TrainHyper(optimizer="sgd" if combo["sgd"] else "adam",
                           lr=combo["lr"], l2=combo["l2"])
        net_config = NetConfig(board_size=dataset.config.size,
                               num_res_blocks=combo["num_res_blocks"],
                               extra_act_fc=combo["extra_act_fc"],
                               dropout=combo["dropout"])
        label = json.dumps(combo, sort_keys=True)
        try:
            record = supervised_run(dataset, mode, hyper, iterations,
                                    seed=sub_seed(seed, "grid", i), label=label)
        except Exception:
            record = ConvergenceRecord(mode=mode, failed=True, label=label)
        records.append(record)
        if out_dir is not None:
            with open(os.path.join(out_dir, f"grid-{i:04d}.json"), "w") as f:
                json.dump(record.to_json(), f, sort_keys=True, indent=2)
    def rank_key(r):
        return (r.failed or r.final_loss is None,
                r.final_loss if r.final_loss is not None else float("inf"))
    return sorted(records, key=rank_key)


# ---------------------------------------------------------------------------
# dataset persistence: records.jsonl (one labeled state per line, with split
# membership) plus manifest.json carrying seeds and counts

def _encode_record(sample: LabeledState, split: str) -> dict:
    n = sample.state.size
    return {
        "board": "".join(str(int(v)) for v in sample.state.board.ravel()),
        "to_move": int(sample.state.to_move),
        "pi": {str(i): float(p) for i, p in enumerate(sample.pi) if p > 0},
        "value": float(sample.value),
        "split": split,
    }


def _decode_record(rec: dict, config: BoardConfig) -> LabeledState:
    n = config.size
    board = np.array([int(ch) for ch in rec["board"]],
                     dtype=np.int8).reshape(n, n)
    state = board_mod.from_board(config, board, rec["to_move"])
    pi = np.zeros(n * n, dtype=np.float32)
    for cell, p in rec["pi"].items():
        pi[int(cell)] = p
    return LabeledState(state, pi, rec["value"])


def save_dataset(dataset: Dataset, out_dir) -> None:
    os.makedirs(out_dir, exist_ok=True)
    manifest = {
        "schema_version": 1,
        "board_size": dataset.config.size,
        "win_length": dataset.config.win_length,
        "seeds": list(dataset.seeds),
        "split_seed": dataset.split_seed,
        "counts": {"train": len(dataset.train),
                   "validation": len(dataset.validation),
                   "total": len(dataset.train) + len(dataset.validation)},
    }
    with open(os.path.join(out_dir, "manifest.json"), "w") as f:
        json.dump(manifest, f, sort_keys=True, indent=2)
    with open(os.path.join(out_dir, "records.jsonl"), "w") as f:
        for sample in dataset.train:
            f.write(json.dumps(_encode_record(sample, "train"),
                               sort_keys=True) + "\n")
        for sample in dataset.validation:
            f.write(json.dumps(_encode_record(sample, "validation"),
                               sort_keys=True) + "\n")


def load_dataset(out_dir) -> Dataset:
    with open(os.path.join(out_dir, "manifest.json")) as f:
        manifest = json.load(f)
    config = BoardConfig(size=manifest["board_size"],
                         win_length=manifest["win_length"])
    train, validation = [], []
    with open(os.path.join(out_dir, "records.jsonl")) as f:
        for line in f:
            rec = json.loads(line)
            sample = _decode_record(rec, config)
            (train if rec["split"] == "train" else validation).append(sample)
    if len(train) != manifest["counts"]["train"]:
        raise ValueError("record count does not match manifest")
    return Dataset(config, train, validation,
                   tuple(manifest["seeds"]), manifest["split_seed"])
