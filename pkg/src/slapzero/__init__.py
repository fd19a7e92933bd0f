"""Symmetry-canonicalized Gomoku learning toolkit."""

from .board import (BLACK, WHITE, BoardConfig, GameState, IllegalMoveError,
                    Status, encode_planes, new_game)
from .symmetry import (D4Transform, ELEMENTS, IDENTITY, SlapResult,
                       apply_transform, augment_8, compose, inverse,
                       map_policy_back, slap, slap_cc)
from .net import NetConfig, PolicyValueNet, TrainHyper, Trainer
from .mcts import MctsAgent, SearchConfig, pure_mcts_agent

__version__ = "0.1.0"
