"""Synthetic dataset generation, labeling and the supervised harness."""
import json

import numpy as np
import pytest

from slapzero.board import BLACK, WHITE, BoardConfig
from slapzero.net import NetConfig, TrainHyper
from slapzero.symmetry import slap
from slapzero.synthetic import (ABOUT_TO_WIN_PER_SET, GRID_SPEC,
                                build_dataset, build_mixed_set,
                                encode_arrays, enumerate_win_lines,
                                gen_about_to_win_states, gen_random_states,
                                grid_combinations, grid_driver, label_state,
                                load_dataset, save_dataset, supervised_run,
                                winning_cells)
from slapzero import board as board_mod

CFG = BoardConfig(size=8)


def test_enumerate_win_lines():
    lines = enumerate_win_lines(8)
    assert len(lines) == 96
    with pytest.raises(ValueError):
        enumerate_win_lines(4)


def test_about_to_win_states():
    rng = np.random.default_rng(0)
    states = gen_about_to_win_states(CFG, rng)
    assert len(states) == ABOUT_TO_WIN_PER_SET == 480
    for state in states[::37]:
        assert state.to_move == BLACK
        assert int(np.count_nonzero(state.board == BLACK)) == 4
        assert int(np.count_nonzero(state.board == WHITE)) == 4
        assert len(winning_cells(state)) >= 1


def test_random_states():
    rng = np.random.default_rng(1)
    states = gen_random_states(CFG, rng, count=50)
    assert len(states) == 50
    for state in states:
        assert int(np.count_nonzero(state.board == BLACK)) == 4
        assert int(np.count_nonzero(state.board == WHITE)) == 4
        assert state.to_move == BLACK


def test_winning_cells_brute_force():
    board = np.zeros((8, 8), dtype=np.int8)
    board[0, 0:4] = BLACK  # open ended at (0,4) only (edge blocks the left)
    board[7, 0:4] = WHITE
    state = board_mod.from_board(CFG, board, BLACK)
    assert winning_cells(state) == [4]
    # the probe must not mutate the board
    assert board[0, 4] == 0


def test_label_state_winning():
    rng = np.random.default_rng(2)
    board = np.zeros((8, 8), dtype=np.int8)
    board[2, 1:5] = BLACK
    board[6, 1:5] = WHITE
    state = board_mod.from_board(CFG, board, BLACK)
    labeled = label_state(state, rng)
    wins = winning_cells(state)
    assert labeled.value == 1.0
    assert set(np.flatnonzero(labeled.pi)) == set(wins)
    assert np.allclose(labeled.pi[wins], 1.0 / len(wins))


def test_label_state_random():
    rng = np.random.default_rng(3)
    state = gen_random_states(CFG, rng, count=1)[0]
    if winning_cells(state):
        pytest.skip("sampled state happens to contain a win")
    labeled = label_state(state, rng)
    assert labeled.value == 0.0
    assert labeled.pi.sum() == pytest.approx(1.0, abs=1e-6)
    assert (labeled.pi[state.board.ravel() != 0] == 0).all()


def test_build_mixed_set_size_and_determinism():
    a = build_mixed_set(CFG, seed=11)
    b = build_mixed_set(CFG, seed=11)
    assert len(a) == 1480
    assert np.array_equal(a[0].state.board, b[0].state.board)
    assert np.array_equal(a[-1].pi, b[-1].pi)


def test_build_dataset_split():
    dataset = build_dataset(CFG, seeds=(1, 2), split_seed=0)
    total = len(dataset.train) + len(dataset.validation)
    assert total == 2960
    assert len(dataset.validation) == round(0.15 * total)
    with pytest.raises(ValueError):
        build_dataset(CFG, seeds=(1, 1))


def test_encode_arrays_modes():
    dataset = build_dataset(CFG, seeds=(5,), split_seed=0)
    samples = dataset.train[:16]
    raw = encode_arrays(samples, "raw")
    assert raw[0].shape == (16, 4, 8, 8)
    assert raw[1].shape == (16, 64)
    canonical = encode_arrays(samples, "slap")
    assert canonical[0].shape == (16, 4, 8, 8)
    for planes in canonical[0]:
        assert np.array_equal(slap(planes).canonical, planes)
    augmented = encode_arrays(samples, "augment8")
    assert augmented[0].shape == (16 * 8, 4, 8, 8)
    cc = encode_arrays(samples, "slap_cc")
    assert cc[0].shape == (16 * 8, 8, 8, 8)
    cc_raw = encode_arrays(samples, "cc_raw")
    assert cc_raw[0].shape == (16, 8, 8, 8)
    with pytest.raises(ValueError):
        encode_arrays(samples, "bogus")


def test_save_load_round_trip(tmp_path):
    dataset = build_dataset(CFG, seeds=(7,), split_seed=3)
    save_dataset(dataset, tmp_path)
    loaded = load_dataset(tmp_path)
    assert loaded.seeds == dataset.seeds
    assert loaded.split_seed == dataset.split_seed
    assert len(loaded.train) == len(dataset.train)
    for a, b in zip(dataset.train[:20], loaded.train[:20]):
        assert np.array_equal(a.state.board, b.state.board)
        assert np.allclose(a.pi, b.pi, atol=1e-7)
        assert a.value == b.value
    manifest = json.loads((tmp_path / "manifest.json").read_text())
    assert manifest["counts"]["total"] == 1480


def test_supervised_run_smoke():
    dataset = build_dataset(CFG, seeds=(9,), split_seed=0)
    hyper = TrainHyper(lr=1e-3, batch_size=32)
    net_config = NetConfig(board_size=8, common_filters=(4, 4))
    record = supervised_run(dataset, "slap", hyper, iterations=20, seed=0,
                            net_config=net_config, record_every=10)
    assert record.mode == "slap"
    assert len(record.losses) == 2
    assert record.final_loss == record.losses[-1][1]
    assert not record.failed
    assert set(record.iterations_to) == {3.0, 2.9}


def test_grid_combinations_default_size():
    combos = grid_combinations()
    assert len(combos) == 2400
    assert len({json.dumps(c, sort_keys=True) for c in combos}) == 2400
    small = grid_combinations({"lr": (1e-3, 1e-4), "sgd": (True, False)})
    assert len(small) == 4


def test_grid_driver_ranks_and_isolates_failures(tmp_path):
    dataset = build_dataset(CFG, seeds=(13,), split_seed=0)
    combos = [
        {"use_slap": True, "extra_act_fc": False, "l2": 1e-4,
         "num_res_blocks": 0, "sgd": False, "lr": 1e-3, "dropout": 0.0},
        # divergent learning rate: may fail, must not crash the driver
        {"use_slap": False, "extra_act_fc": False, "l2": 1e-4,
         "num_res_blocks": 0, "sgd": True, "lr": 1e6, "dropout": 0.0},
    ]
    records = grid_driver(dataset, combos, iterations=10, seed=0,
                          out_dir=tmp_path)
    assert len(records) == 2
    assert (tmp_path / "grid-0000.json").exists()
    healthy = [r for r in records if not r.failed and r.final_loss is not None]
    assert records[:len(healthy)] == sorted(
        healthy, key=lambda r: r.final_loss)
