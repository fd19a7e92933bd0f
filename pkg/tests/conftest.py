"""Shared fixtures and the --runslow gate for the long-running suite."""
import numpy as np
import pytest

from slapzero.board import BLACK, WHITE, BoardConfig, from_board


def pytest_addoption(parser):
    parser.addoption("--runslow", action="store_true", default=False,
                     help="also run tests marked slow (multi-minute runs)")


def pytest_collection_modifyitems(config, items):
    if config.getoption("--runslow"):
        return
    skip_slow = pytest.mark.skip(reason="slow test, pass --runslow to run")
    for item in items:
        if "slow" in item.keywords:
            item.add_marker(skip_slow)


@pytest.fixture
def rng():
    return np.random.default_rng(0)


def random_board(rng, n=8, max_stones=20):
    """Random parity-consistent board with no completed line required."""
    stones = int(rng.integers(0, max_stones + 1))
    blacks = (stones + 1) // 2
    cells = rng.choice(n * n, size=stones, replace=False)
    board = np.zeros((n, n), dtype=np.int8)
    for i, cell in enumerate(cells):
        board[cell // n, cell % n] = BLACK if i < blacks else WHITE
    return board


def random_state(rng, n=8, max_stones=20):
    board = random_board(rng, n, max_stones)
    blacks = int(np.count_nonzero(board == BLACK))
    whites = int(np.count_nonzero(board == WHITE))
    to_move = BLACK if blacks == whites else WHITE
    return from_board(BoardConfig(size=n), board, to_move)
