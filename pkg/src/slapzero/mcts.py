"""PUCT tree search, visit-count policies, and the evaluator agents.

One tree is owned by one caller; parallelism happens across games, never
inside a tree. Fresh trees are built per move unless subtree reuse is
explicitly enabled.
"""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .board import BLACK, GameState, Status
from .net import PolicyValueNet, policy_value
from .symmetry import IDENTITY, map_policy_back, slap
from . import board as board_mod
from . import symmetry


@dataclass
class SearchConfig:
    c_puct: float = 5.0
    n_playouts: int = 400
    dirichlet_alpha: float = 0.3
    dirichlet_epsilon: float = 0.25
    temperature: float = 1.0

    def __post_init__(self):
        if min(self.c_puct, self.n_playouts, self.dirichlet_alpha,
               self.dirichlet_epsilon, self.temperature) <= 0:
            raise ValueError("search parameters must be positive")


class Node:
    __slots__ = ("prior", "visits", "value_sum", "children")

    def __init__(self, prior: float):
        self.prior = prior
        self.visits = 0
        self.value_sum = 0.0
        self.children: dict[int, Node] = {}

    @property
    def q(self) -> float:
        return self.value_sum / self.visits if self.visits else 0.0


def puct_score(child: Node, parent_visits: int, c: float) -> float:
    return child.q + c * child.prior * math.sqrt(parent_visits) / (1 + child.visits)


def _select_child(node: Node, c: float):
    # ties broken by lowest action index: iterate actions in sorted order
    parent_visits = node.visits - 1  # root expansion consumed one visit
    best_a, best_child, best_score = -1, None, -math.inf
    for a in sorted(node.children):
        child = node.children[a]
        score = puct_score(child, parent_visits, c)
        if score > best_score:
            best_a, best_child, best_score = a, child, score
    return best_a, best_child


class UniformEvaluator:
    """Uniform priors, zero value; useful as an untrained stand-in."""

    def __call__(self, state: GameState):
        legal = state.legal_moves()
        priors = np.zeros(state.size ** 2)
        priors[legal] = 1.0 / len(legal)
        return priors, 0.0


class RolloutEvaluator:
    """Uniform priors; leaf value from one uniformly random playout."""

    def __init__(self, rng: np.random.Generator):
        self.rng = rng

    def __call__(self, state: GameState):
        legal = state.legal_moves()
        priors = np.zeros(state.size ** 2)
        priors[legal] = 1.0 / len(legal)
        return priors, random_rollout_value(state, self.rng)


def random_rollout_value(state: GameState, rng: np.random.Generator) -> float:
    """Play uniformly random moves to the end; value for the player to move."""
    board = state.board.copy()
    n = state.size
    player = state.to_move
    empties = list(np.flatnonzero(board.ravel() == 0))
    rng.shuffle(empties)
    win_len = state.config.win_length
    while empties:
        cell = empties.pop()
        r, c = divmod(cell, n)
        board[r, c] = player
        if board_mod._wins_through(board, r, c, player, win_len):
            return 1.0 if player == state.to_move else -1.0
        player = board_mod.other_player(player)
    return 0.0


class NetEvaluator:
    """Policy-value network evaluation, optionally canonicalizing first.

    With use_slap the state is canonicalized before the forward pass and the
    policy is mapped back through the inverse transform, making the evaluation
    invariant across the 8 symmetry variants. With extend_cc the 4 base planes
    are extended with centred-stone and position-index planes.
    """

    def __init__(self, net: PolicyValueNet, use_slap: bool = False,
                 extend_cc: bool = False):
        self.net = net
        self.use_slap = use_slap
        self.extend_cc = extend_cc

    def __call__(self, state: GameState):
        planes = board_mod.encode_planes(state)
        transform = IDENTITY
        if self.use_slap:
            result = slap(planes)
            planes, transform = result.canonical, result.transform
        if self.extend_cc:
            planes = symmetry.extend_planes_cc(planes)
        probs, value = policy_value(self.net, planes)
        if self.use_slap and transform != IDENTITY:
            probs = map_policy_back(probs, transform)
        legal = state.legal_moves()
        priors = np.zeros_like(probs)
        priors[legal] = probs[legal]
        total = priors.sum()
        if total > 0:
            priors /= total
        else:
            priors[legal] = 1.0 / len(legal)
        return priors, float(value)


def run_playouts(root_state: GameState, evaluator, cfg: SearchConfig,
                 rng: np.random.Generator | None = None,
                 root_noise: bool = False,
                 root: Node | None = None) -> np.ndarray:
    """Run cfg.n_playouts PUCT playouts; returns visit counts over N^2 cells.

    Passing a carried-over root continues searching an existing subtree.
    """
    if root_state.status is not Status.ONGOING:
        raise ValueError("cannot search from a terminal state")
    if root_noise and rng is None:
        raise ValueError("root noise requires an rng")
    if root is None:
        root = Node(1.0)
    for i in range(cfg.n_playouts):
        _playout(root_state, root, evaluator, cfg)
        if i == 0 and root_noise:
            _mix_root_noise(root, cfg, rng)
    counts = np.zeros(root_state.size ** 2)
    for a, child in root.children.items():
        counts[a] = child.visits
    return counts


def _playout(state: GameState, root: Node, evaluator, cfg: SearchConfig):
    node = root
    path = [root]
    while node.children:
        action, node = _select_child(node, cfg.c_puct)
        state = state.play(action)
        path.append(node)
    if state.status is Status.WIN:
        value = -1.0  # the player to move at the leaf has just lost
    elif state.status is Status.DRAW:
        value = 0.0
    else:
        priors, value = evaluator(state)
        for a in state.legal_moves():
            node.children[int(a)] = Node(float(priors[a]))
    # value is from the leaf player's perspective; each edge stores the
    # outcome for the player who took it, so negate once and then per ply
    value = -value
    for node in reversed(path):
        node.visits += 1
        node.value_sum += value
        value = -value


def _mix_root_noise(root: Node, cfg: SearchConfig, rng: np.random.Generator):
    actions = sorted(root.children)
    noise = rng.dirichlet([cfg.dirichlet_alpha] * len(actions))
    eps = cfg.dirichlet_epsilon
    for a, eta in zip(actions, noise):
        child = root.children[a]
        child.prior = (1 - eps) * child.prior + eps * float(eta)


def move_probs(visit_counts: np.ndarray, temperature: float = 1.0) -> np.ndarray:
    """Normalized visit-count policy; temperature 0 means greedy."""
    counts = np.asarray(visit_counts, dtype=np.float64)
    if counts.sum() <= 0:
        raise ValueError("no visits recorded")
    if temperature <= 1e-3:
        probs = np.zeros_like(counts)
        probs[int(np.argmax(counts))] = 1.0
        return probs
    scaled = np.zeros_like(counts)
    positive = counts > 0
    scaled[positive] = counts[positive] ** (1.0 / temperature)
    return scaled / scaled.sum()


def selfplay_move(probs: np.ndarray, rng: np.random.Generator) -> int:
    return int(rng.choice(len(probs), p=probs))


def greedy_move(probs: np.ndarray) -> int:
    return int(np.argmax(probs))


class MctsAgent:
    """Move-producing agent wrapping an evaluator behind PUCT search.

    By default every call searches a fresh tree, so results depend only on
    the position and the rng state. With reuse_tree the subtree below the
    played move (and the opponent's reply) is kept as the next root.
    """

    def __init__(self, evaluator, cfg: SearchConfig,
                 rng: np.random.Generator | None = None,
                 greedy: bool = True, root_noise: bool = False,
                 reuse_tree: bool = False):
        self.evaluator = evaluator
        self.cfg = cfg
        self.rng = rng
        self.greedy = greedy
        self.root_noise = root_noise
        self.reuse_tree = reuse_tree
        self._root: Node | None = None
        self._root_move_count = -1

    def _carried_root(self, state: GameState) -> Node | None:
        """Descend the kept tree through the opponent's reply, if recorded."""
        if self._root is None:
            return None
        if (state.move_count != self._root_move_count + 1
                or state.last_move is None):
            return None
        return self._root.children.get(state.last_move)

    def move(self, state: GameState) -> int:
        root = None
        if self.reuse_tree:
            root = self._carried_root(state) or Node(1.0)
        counts = run_playouts(state, self.evaluator, self.cfg,
                              rng=self.rng, root_noise=self.root_noise,
                              root=root)
        if counts.sum() == 0:
            # degenerate budget (root expansion only): uniform over legal
            legal = state.legal_moves()
            if self.rng is None:
                action = int(legal[0])
            else:
                action = int(self.rng.choice(legal))
        elif self.greedy:
            action = greedy_move(move_probs(counts, temperature=0.0))
        else:
            probs = move_probs(counts, self.cfg.temperature)
            action = selfplay_move(probs, self.rng)
        if self.reuse_tree:
            self._root = root.children.get(action)
            self._root_move_count = state.move_count + 1
        return action


def pure_mcts_agent(n_playouts: int, rng: np.random.Generator,
                    c_puct: float = 5.0) -> MctsAgent:
    """Baseline agent: uniform priors, random-rollout leaf values, greedy."""
    cfg = SearchConfig(c_puct=c_puct, n_playouts=n_playouts)
    return MctsAgent(RolloutEvaluator(rng), cfg, rng=rng, greedy=True)


class RandomAgent:
    def __init__(self, rng: np.random.Generator):
        self.rng = rng

    def move(self, state: GameState) -> int:
        return int(self.rng.choice(state.legal_moves()))
