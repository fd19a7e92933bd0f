"""Multi-tier evaluation against pure-MCTS baselines and winning-rate
statistics with a normal-approximation confidence interval."""
from __future__ import annotations

import json
import math
from dataclasses import dataclass, field

import numpy as np

from . import board as board_mod
from .board import BLACK, WHITE, BoardConfig, IllegalMoveError, Status
from .mcts import pure_mcts_agent
from .seeding import sub_rng

DEFAULT_TIERS = (1000, 3000, 5000)


@dataclass
class GameRecord:
    black_agent: str
    white_agent: str
    winner: str  # "black", "white" or "draw"
    moves: list[int] = field(default_factory=list)

    def trace(self, n: int) -> str:
        lines = [f"black: {self.black_agent}", f"white: {self.white_agent}"]
        lines += [f"{m // n},{m % n}" for m in self.moves]
        lines.append(f"result: {self.winner}")
        return "\n".join(lines)


@dataclass
class TierResult:
    playouts: int
    wins: int
    ties: int
    losses: int


@dataclass
class EvalReport:
    tiers: list[TierResult]
    rate: float
    ci: tuple[float, float]
    seed: int
    checkpoint: str = ""

    def to_json(self) -> dict:
        return {
            "tiers": [{"playouts": t.playouts, "wins": t.wins,
                       "ties": t.ties, "losses": t.losses}
                      for t in self.tiers],
            "rate": self.rate,
            "ci": [self.ci[0], self.ci[1]],
            "seed": self.seed,
            "checkpoint": self.checkpoint,
        }


def confidence_interval(p: float, n: int = 30, z: float = 1.96):
    """Normal-approximation 95% interval for a Bernoulli rate, clamped."""
    if not 0.0 <= p <= 1.0:
        raise ValueError("rate must lie in [0, 1]")
    half = z * math.sqrt(p * (1.0 - p) / n)
    return max(0.0, p - half), min(1.0, p + half)


def play_single_game(black_agent, white_agent, board_cfg: BoardConfig,
                     names=("black", "white")) -> GameRecord:
    """One full game; an illegal move forfeits for the offender."""
    state = board_mod.new_game(board_cfg)
    agents = {BLACK: black_agent, WHITE: white_agent}
    moves = []
    while state.status is Status.ONGOING:
        mover = state.to_move
        try:
            action = agents[mover].move(state)
            state = state.play(int(action))
        except IllegalMoveError:
            winner = "white" if mover == BLACK else "black"
            return GameRecord(names[0], names[1], winner, moves)
        moves.append(int(action))
    if state.status is Status.DRAW:
        winner = "draw"
    else:
        winner = "black" if state.winner == BLACK else "white"
    return GameRecord(names[0], names[1], winner, moves)


def play_match(make_agent_a, make_agent_b, n_games: int,
               board_cfg: BoardConfig, seed: int = 0):
    """n_games with colors alternating game by game; agents are rebuilt per
    game from seeded factories. Returns (a_wins, ties, b_wins, records)."""
    a_wins = ties = b_wins = 0
    records = []
    for game in range(n_games):
        rng_a = sub_rng(seed, "match", game, "a")
        rng_b = sub_rng(seed, "match", game, "b")
        a_is_black = game % 2 == 0
        agent_a, agent_b = make_agent_a(rng_a), make_agent_b(rng_b)
        if a_is_black:
            record = play_single_game(agent_a, agent_b, board_cfg, ("a", "b"))
        else:
            record = play_single_game(agent_b, agent_a, board_cfg, ("b", "a"))
        records.append(record)
        if record.winner == "draw":
            ties += 1
        elif (record.winner == "black") == a_is_black:
            a_wins += 1
        else:
            b_wins += 1
    return a_wins, ties, b_wins, records


def evaluate_tiers(make_net_agent, board_cfg: BoardConfig, seed: int = 0,
                   tiers=DEFAULT_TIERS, games_per_tier: int = 10,
                   c_puct: float = 5.0, checkpoint: str = "",
                   log_dir=None) -> EvalReport:
    """10 games per tier against pure-MCTS agents of growing playout budget;
    overall winning rate counts a tie as half a win."""
    tier_results = []
    total_games = 0
    score = 0.0
    for playouts in tiers:
        def make_opponent(rng, n=playouts):
            return pure_mcts_agent(n, rng, c_puct=c_puct)
        wins, ties, losses, records = play_match(
            make_net_agent, make_opponent, games_per_tier, board_cfg,
            seed=sub_rng(seed, "tier", playouts).integers(2 ** 31))
        tier_results.append(TierResult(playouts, wins, ties, losses))
        score += wins + 0.5 * ties
        total_games += games_per_tier
        if log_dir is not None:
            import os
            for i, record in enumerate(records):
                path = os.path.join(log_dir, f"tier{playouts}-game{i}.txt")
                with open(path, "w") as f:
                    f.write(record.trace(board_cfg.size) + "\n")
    rate = score / total_games
    return EvalReport(tier_results, rate, confidence_interval(rate, total_games),
                      seed=seed, checkpoint=checkpoint)


# ---------------------------------------------------------------------------
# checkpoint-driven evaluation, optionally parallel across games; results are
# identical to the sequential path because every game owns a derived seed

_WORKER_NETS: dict = {}


def _net_agent_from_spec(spec: dict, rng):
    from .mcts import MctsAgent, NetEvaluator, SearchConfig
    from .net import load_checkpoint
    path = spec["checkpoint"]
    if path not in _WORKER_NETS:
        _WORKER_NETS[path] = load_checkpoint(path)[0]
    net = _WORKER_NETS[path]
    evaluator = NetEvaluator(net, use_slap=spec["use_slap"],
                             extend_cc=spec["extend_cc"])
    cfg = SearchConfig(c_puct=spec["c_puct"], n_playouts=spec["net_playouts"])
    return MctsAgent(evaluator, cfg, rng=rng, greedy=True)


def _play_eval_game(spec: dict, board_size: int, playouts: int,
                    tier_seed: int, game: int) -> str:
    board_cfg = BoardConfig(size=board_size)
    rng_a = sub_rng(tier_seed, "match", game, "a")
    rng_b = sub_rng(tier_seed, "match", game, "b")
    agent_a = _net_agent_from_spec(spec, rng_a)
    agent_b = pure_mcts_agent(playouts, rng_b, c_puct=spec["c_puct"])
    a_is_black = game % 2 == 0
    if a_is_black:
        record = play_single_game(agent_a, agent_b, board_cfg, ("a", "b"))
    else:
        record = play_single_game(agent_b, agent_a, board_cfg, ("b", "a"))
    if record.winner == "draw":
        return "tie"
    return "win" if (record.winner == "black") == a_is_black else "loss"


def evaluate_checkpoint(spec: dict, board_cfg: BoardConfig, seed: int = 0,
                        tiers=DEFAULT_TIERS, games_per_tier: int = 10,
                        workers: int = 1) -> EvalReport:
    """Evaluate a saved checkpoint against the pure-MCTS tiers.

    spec: {checkpoint, use_slap, extend_cc, net_playouts, c_puct}.
    """
    jobs = []
    for playouts in tiers:
        tier_seed = int(sub_rng(seed, "tier", playouts).integers(2 ** 31))
        for game in range(games_per_tier):
            jobs.append((playouts, tier_seed, game))
    if workers > 1:
        from concurrent.futures import ProcessPoolExecutor
        with ProcessPoolExecutor(max_workers=workers) as pool:
            outcomes = list(pool.map(
                _play_eval_game,
                *zip(*[(spec, board_cfg.size, p, ts, g)
                       for p, ts, g in jobs])))
    else:
        outcomes = [_play_eval_game(spec, board_cfg.size, p, ts, g)
                    for p, ts, g in jobs]
    tier_results = []
    score = 0.0
    for playouts in tiers:
        counts = {"win": 0, "tie": 0, "loss": 0}
        for (p, _, _), outcome in zip(jobs, outcomes):
            if p == playouts:
                counts[outcome] += 1
        tier_results.append(TierResult(playouts, counts["win"],
                                       counts["tie"], counts["loss"]))
        score += counts["win"] + 0.5 * counts["tie"]
    total = len(tiers) * games_per_tier
    rate = score / total
    return EvalReport(tier_results, rate, confidence_interval(rate, total),
                      seed=seed, checkpoint=str(spec["checkpoint"]))
