"""Match play, tiered evaluation and winning-rate statistics."""
import numpy as np
import pytest

from slapzero.board import BLACK, WHITE, BoardConfig, Status
from slapzero.evaluation import (EvalReport, GameRecord, confidence_interval,
                                 evaluate_checkpoint, evaluate_tiers,
                                 play_match, play_single_game)
from slapzero.mcts import RandomAgent
from slapzero.net import NetConfig, PolicyValueNet, TrainHyper, save_checkpoint

CFG = BoardConfig(size=8)


class ScriptedAgent:
    """Plays a fixed move sequence (flat indices)."""

    def __init__(self, moves):
        self.moves = iter(moves)

    def move(self, state):
        return next(self.moves)


class FirstEmptyAgent:
    def move(self, state):
        return int(state.legal_moves()[0])


def test_confidence_interval_examples():
    low, high = confidence_interval(26 / 30)
    assert abs(low - 0.745) < 1e-3
    assert abs(high - 0.989) < 1e-3
    # 28/30: the half-width is 8.9 points; the upper end clamps at 1.0
    p = 28 / 30
    low, high = confidence_interval(p)
    assert abs((p - low) - 0.089) < 1e-3
    assert high == 1.0


def test_confidence_interval_clamps():
    assert confidence_interval(1.0) == (1.0, 1.0)
    assert confidence_interval(0.0) == (0.0, 0.0)
    low, high = confidence_interval(0.97, n=30)
    assert high == 1.0 and low > 0.9
    with pytest.raises(ValueError):
        confidence_interval(1.5)


def test_play_single_game_scripted_win():
    # black builds row 0, white builds row 7 one move behind
    black = ScriptedAgent([0, 1, 2, 3, 4])
    white = ScriptedAgent([56, 57, 58, 59])
    record = play_single_game(black, white, CFG)
    assert record.winner == "black"
    assert len(record.moves) == 9
    trace = record.trace(8)
    assert trace.splitlines()[-1] == "result: black"
    assert "0,4" in trace


def test_play_single_game_illegal_move_forfeits():
    black = ScriptedAgent([0, 0])  # repeats an occupied cell
    white = ScriptedAgent([56])
    record = play_single_game(black, white, CFG)
    assert record.winner == "white"


def test_play_match_alternates_colors():
    winners = []

    class Recorder:
        def __init__(self, rng):
            pass

    def make_first_empty(rng):
        return FirstEmptyAgent()

    def make_random(rng):
        return RandomAgent(rng)

    a_wins, ties, b_wins, records = play_match(make_first_empty, make_random,
                                               4, CFG, seed=0)
    assert a_wins + ties + b_wins == 4
    assert records[0].black_agent == "a"
    assert records[1].black_agent == "b"


def test_play_match_deterministic():
    def make_random(rng):
        return RandomAgent(rng)

    first = play_match(make_random, make_random, 3, CFG, seed=7)
    second = play_match(make_random, make_random, 3, CFG, seed=7)
    assert first[:3] == second[:3]
    assert [r.moves for r in first[3]] == [r.moves for r in second[3]]


def test_evaluate_tiers_counts_and_rate(tmp_path):
    def make_agent(rng):
        return FirstEmptyAgent()

    report = evaluate_tiers(make_agent, CFG, seed=0, tiers=(2, 4),
                            games_per_tier=2, log_dir=tmp_path)
    assert [t.playouts for t in report.tiers] == [2, 4]
    total = sum(t.wins + t.ties + t.losses for t in report.tiers)
    assert total == 4
    score = sum(t.wins + 0.5 * t.ties for t in report.tiers)
    assert report.rate == pytest.approx(score / 4)
    assert report.ci[0] <= report.rate <= report.ci[1]
    assert (tmp_path / "tier2-game0.txt").exists()
    payload = report.to_json()
    assert payload["seed"] == 0 and len(payload["tiers"]) == 2


def _save_tiny_checkpoint(path):
    net = PolicyValueNet(NetConfig(board_size=8, common_filters=(4,)),
                         init_seed=1)
    save_checkpoint(net, TrainHyper(), 0, path)


def test_evaluate_checkpoint_sequential(tmp_path):
    path = tmp_path / "net.bin"
    _save_tiny_checkpoint(path)
    spec = {"checkpoint": str(path), "use_slap": True, "extend_cc": False,
            "net_playouts": 4, "c_puct": 5.0}
    report = evaluate_checkpoint(spec, CFG, seed=1, tiers=(2,),
                                 games_per_tier=2)
    assert isinstance(report, EvalReport)
    tier = report.tiers[0]
    assert tier.wins + tier.ties + tier.losses == 2
    assert report.checkpoint == str(path)


def test_evaluate_checkpoint_workers_match_sequential(tmp_path):
    path = tmp_path / "net.bin"
    _save_tiny_checkpoint(path)
    spec = {"checkpoint": str(path), "use_slap": False, "extend_cc": False,
            "net_playouts": 4, "c_puct": 5.0}
    sequential = evaluate_checkpoint(spec, CFG, seed=2, tiers=(2,),
                                     games_per_tier=2, workers=1)
    parallel = evaluate_checkpoint(spec, CFG, seed=2, tiers=(2,),
                                   games_per_tier=2, workers=2)
    assert sequential.to_json() == parallel.to_json()
