"""Gomoku (freestyle five-in-a-row) rules, win detection and feature planes.

Cells are indexed row-major with origin top-left: flat = row * N + col.
Black moves first and is encoded as 1, white as 2.
"""
from __future__ import annotations

from dataclasses import dataclass
from enum import Enum
from typing import Optional

import numpy as np

BLACK = 1
WHITE = 2

# (dr, dc) for the four line orientations
_DIRECTIONS = ((0, 1), (1, 0), (1, 1), (1, -1))


class IllegalMoveError(Exception):
    """Raised when playing an occupied cell or moving in a finished game."""


class Status(Enum):
    ONGOING = "ongoing"
    WIN = "win"
    DRAW = "draw"


@dataclass(frozen=True)
class BoardConfig:
    size: int = 8
    win_length: int = 5

    def __post_init__(self):
        if self.win_length != 5:
            raise ValueError("only the freestyle win length of 5 is supported")
        if self.size < self.win_length:
            raise ValueError(f"board size {self.size} smaller than win length")
        if self.size > 19:
            raise ValueError("board size above 19 is not supported")


def other_player(player: int) -> int:
    return BLACK + WHITE - player


class GameState:
    """Immutable board position; `play` returns a new state.

    Safe to share read-only between threads.
    """

    __slots__ = ("config", "board", "to_move", "last_move", "move_count",
                 "status", "winner")

    def __init__(self, config: BoardConfig, board: np.ndarray, to_move: int,
                 last_move: Optional[int], move_count: int,
                 status: Status, winner: Optional[int]):
        self.config = config
        self.board = board
        self.to_move = to_move
        self.last_move = last_move
        self.move_count = move_count
        self.status = status
        self.winner = winner

    @property
    def size(self) -> int:
        return self.config.size

    def legal_moves(self) -> np.ndarray:
        return np.flatnonzero(self.board.ravel() == 0)

    def play(self, cell: int) -> "GameState":
        """Place the stone of the player to move at flat index `cell`."""
        n = self.size
        if self.status is not Status.ONGOING:
            raise IllegalMoveError("game is already finished")
        if not 0 <= cell < n * n:
            raise IllegalMoveError(f"cell {cell} out of range")
        r, c = divmod(cell, n)
        if self.board[r, c] != 0:
            raise IllegalMoveError(f"cell ({r},{c}) is occupied")
        board = self.board.copy()
        board[r, c] = self.to_move
        move_count = self.move_count + 1
        if _wins_through(board, r, c, self.to_move, self.config.win_length):
            status, winner = Status.WIN, self.to_move
        elif move_count == n * n:
            status, winner = Status.DRAW, None
        else:
            status, winner = Status.ONGOING, None
        return GameState(self.config, board, other_player(self.to_move),
                         cell, move_count, status, winner)

    def __eq__(self, other):
        return (isinstance(other, GameState)
                and self.config == other.config
                and self.to_move == other.to_move
                and self.last_move == other.last_move
                and np.array_equal(self.board, other.board))

    def __repr__(self):
        return (f"GameState(size={self.size}, to_move={self.to_move}, "
                f"moves={self.move_count}, status={self.status.value})")


def new_game(config: BoardConfig = BoardConfig()) -> GameState:
    board = np.zeros((config.size, config.size), dtype=np.int8)
    return GameState(config, board, BLACK, None, 0, Status.ONGOING, None)


def from_board(config: BoardConfig, board: np.ndarray, to_move: int,
               last_move: Optional[int] = None) -> GameState:
    """Build a state from an arbitrary (consistent) board array."""
    board = np.asarray(board, dtype=np.int8)
    if board.shape != (config.size, config.size):
        raise ValueError("board shape does not match config")
    blacks = int(np.count_nonzero(board == BLACK))
    whites = int(np.count_nonzero(board == WHITE))
    if not (blacks == whites or blacks == whites + 1):
        raise ValueError("stone counts violate alternation parity")
    expected = BLACK if blacks == whites else WHITE
    if to_move != expected:
        raise ValueError("player to move inconsistent with stone counts")
    if last_move is not None:
        r, c = divmod(last_move, config.size)
        if board[r, c] != other_player(to_move):
            raise ValueError("last_move must hold a stone of the previous player")
    status, winner = full_scan_status_of(board, config.win_length)
    return GameState(config, board.copy(), to_move, last_move,
                     blacks + whites, status, winner)


def play_move(state: GameState, cell: int) -> GameState:
    return state.play(cell)


def game_status(state: GameState) -> Status:
    return state.status


def _wins_through(board: np.ndarray, r: int, c: int, player: int,
                  win_length: int) -> bool:
    """Incremental check: does a winning run pass through (r, c)?"""
    n = board.shape[0]
    for dr, dc in _DIRECTIONS:
        run = 1
        for sign in (1, -1):
            rr, cc = r + dr * sign, c + dc * sign
            while 0 <= rr < n and 0 <= cc < n and board[rr, cc] == player:
                run += 1
                rr += dr * sign
                cc += dc * sign
        if run >= win_length:
            return True
    return False


def winning_lines(n: int, win_length: int = 5) -> list[tuple[int, ...]]:
    """All straight contiguous windows of `win_length` cells, as flat indices."""
    lines = []
    for r in range(n):
        for c in range(n):
            for dr, dc in _DIRECTIONS:
                er, ec = r + dr * (win_length - 1), c + dc * (win_length - 1)
                if 0 <= er < n and 0 <= ec < n:
                    lines.append(tuple((r + dr * k) * n + (c + dc * k)
                                       for k in range(win_length)))
    return lines


def full_scan_status_of(board: np.ndarray, win_length: int = 5):
    """Whole-board status oracle, independent of the incremental check."""
    n = board.shape[0]
    flat = board.ravel()
    for line in winning_lines(n, win_length):
        first = flat[line[0]]
        if first != 0 and all(flat[i] == first for i in line[1:]):
            return Status.WIN, int(first)
    if np.count_nonzero(board) == n * n:
        return Status.DRAW, None
    return Status.ONGOING, None


def full_scan_status(state: GameState) -> Status:
    status, _ = full_scan_status_of(state.board, state.config.win_length)
    return status


def encode_planes(state: GameState) -> np.ndarray:
    """4-plane encoding: own stones, opponent stones, last action, colour."""
    n = state.size
    planes = np.zeros((4, n, n), dtype=np.float32)
    planes[0] = state.board == state.to_move
    planes[1] = state.board == other_player(state.to_move)
    if state.last_move is not None:
        planes[2, state.last_move // n, state.last_move % n] = 1.0
    if state.to_move == BLACK:
        planes[3] = 1.0
    return planes


_CHARS = {0: ".", BLACK: "X", WHITE: "O"}
_VALUES = {v: k for k, v in _CHARS.items()}


def format_state(state: GameState) -> str:
    """Text diagram: N board lines, then `to_move:` and `last:` headers."""
    lines = ["".join(_CHARS[int(v)] for v in row) for row in state.board]
    lines.append(f"to_move: {_CHARS[state.to_move]}")
    if state.last_move is None:
        lines.append("last: none")
    else:
        lines.append(f"last: {state.last_move // state.size},{state.last_move % state.size}")
    return "\n".join(lines)


def parse_state(text: str, win_length: int = 5) -> GameState:
    rows = [ln.strip() for ln in text.strip().splitlines() if ln.strip()]
    board_rows = [ln for ln in rows if not ln.startswith(("to_move:", "last:"))]
    n = len(board_rows)
    config = BoardConfig(size=n, win_length=win_length)
    board = np.zeros((n, n), dtype=np.int8)
    for r, ln in enumerate(board_rows):
        if len(ln) != n:
            raise ValueError(f"row {r} has length {len(ln)}, expected {n}")
        for c, ch in enumerate(ln):
            board[r, c] = _VALUES[ch]
    to_move = last_move = None
    for ln in rows:
        if ln.startswith("to_move:"):
            to_move = _VALUES[ln.split(":", 1)[1].strip()]
        elif ln.startswith("last:"):
            spec = ln.split(":", 1)[1].strip()
            if spec != "none":
                r, c = (int(x) for x in spec.split(","))
                last_move = r * n + c
    if to_move is None:
        raise ValueError("missing to_move header")
    return from_board(config, board, to_move, last_move)
