"""D4 square symmetries, canonicalization, and crop-and-centre planes.

Canonicalization maps each of the 8 rotation/reflection variants of a plane
stack to one representative (the lexicographically largest flattening) plus
the transform that produced it, so any function wrapped behind it becomes
symmetry-invariant. The inverse transform maps policy outputs back to the
original frame.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np


@dataclass(frozen=True)
class D4Transform:
    """Counterclockwise quarter turns, then an optional left-right flip."""
    rot: int
    flip: bool = False

    def __post_init__(self):
        if self.rot not in (0, 1, 2, 3):
            raise ValueError("rot must be in 0..3")

    @property
    def index(self) -> int:
        return self.rot + 4 * int(self.flip)


IDENTITY = D4Transform(0, False)
ELEMENTS = tuple(D4Transform(r, f) for f in (False, True) for r in range(4))


def from_index(i: int) -> D4Transform:
    return ELEMENTS[i]


def apply_transform(planes: np.ndarray, g: D4Transform) -> np.ndarray:
    """Transform the last two axes: (r, c) -> (N-1-c, r) per quarter turn,
    then (r, c) -> (r, N-1-c) if flipped."""
    planes = np.asarray(planes)
    if planes.shape[-1] != planes.shape[-2]:
        raise ValueError("planes must be square in the last two axes")
    out = np.rot90(planes, k=g.rot, axes=(-2, -1))
    if g.flip:
        out = out[..., ::-1]
    return np.ascontiguousarray(out)


def compose(g: D4Transform, h: D4Transform) -> D4Transform:
    """Element applying h first, then g."""
    if h.flip:
        return D4Transform((h.rot - g.rot) % 4, not g.flip)
    return D4Transform((g.rot + h.rot) % 4, g.flip)


def inverse(g: D4Transform) -> D4Transform:
    if g.flip:
        return g
    return D4Transform((-g.rot) % 4, False)


@dataclass(frozen=True)
class SlapResult:
    canonical: np.ndarray
    transform: D4Transform


def slap(planes: np.ndarray) -> SlapResult:
    """Choose the canonical variant among the 8 symmetry images.

    All variants are flattened channel-by-channel (row-major within each
    channel) and compared lexicographically; the largest wins, ties going to
    the lowest transform index. Channel 0 therefore dominates the comparison.
    """
    planes = np.asarray(planes)
    if planes.ndim != 3:
        raise ValueError("expected a C x N x N stack")
    if planes.shape[-1] != planes.shape[-2]:
        raise ValueError("planes must be square")
    best = apply_transform(planes, ELEMENTS[0]).ravel()
    best_i = 0
    variants = [best]
    for i in range(1, 8):
        flat = apply_transform(planes, ELEMENTS[i]).ravel()
        variants.append(flat)
        diff = flat != best
        if diff.any():
            j = int(np.argmax(diff))
            if flat[j] > best[j]:
                best, best_i = flat, i
    return SlapResult(best.reshape(planes.shape).copy(), ELEMENTS[best_i])


def map_policy_back(policy: np.ndarray, t: D4Transform) -> np.ndarray:
    """Undo a canonicalizing transform on a flat N^2 policy vector."""
    policy = np.asarray(policy)
    n = int(round(len(policy) ** 0.5))
    if n * n != len(policy):
        raise ValueError("policy length is not a perfect square")
    return apply_transform(policy.reshape(n, n), inverse(t)).ravel().copy()


def transform_policy(policy: np.ndarray, g: D4Transform) -> np.ndarray:
    """Apply g to a flat N^2 policy vector (same frame change as the planes)."""
    policy = np.asarray(policy)
    n = int(round(len(policy) ** 0.5))
    if n * n != len(policy):
        raise ValueError("policy length is not a perfect square")
    return apply_transform(policy.reshape(n, n), g).ravel().copy()


def augment_8(planes: np.ndarray, policy: np.ndarray):
    """All 8 (planes, policy) symmetry images, transformed consistently."""
    return [(apply_transform(planes, g), transform_policy(policy, g))
            for g in ELEMENTS]


@dataclass(frozen=True)
class CcShift:
    r_shift: int
    c_shift: int


def slap_cc(stone_planes: np.ndarray) -> tuple[np.ndarray, CcShift]:
    """Centre the union bounding box of the stone planes by a cyclic roll.

    Shifts use floor division, so parity ties lean toward the top left.
    Empty input rolls by (0, 0).
    """
    stone_planes = np.asarray(stone_planes)
    if stone_planes.ndim != 3 or stone_planes.shape[0] != 2:
        raise ValueError("expected a 2 x N x N stone stack")
    n_rows, n_cols = stone_planes.shape[-2:]
    union = stone_planes.any(axis=0)
    rows = np.flatnonzero(union.any(axis=1))
    cols = np.flatnonzero(union.any(axis=0))
    if len(rows) == 0:
        return stone_planes.copy(), CcShift(0, 0)
    r_shift = (n_rows - 1 - int(rows[0]) - int(rows[-1])) // 2
    c_shift = (n_cols - 1 - int(cols[0]) - int(cols[-1])) // 2
    rolled = np.roll(stone_planes, (r_shift, c_shift), axis=(-2, -1))
    return rolled, CcShift(r_shift, c_shift)


def position_index_planes(n: int) -> np.ndarray:
    """Two constant-gradient planes with row/column indices scaled to [1, -1]."""
    if n < 2:
        raise ValueError("need n >= 2")
    ramp = 1.0 - 2.0 * np.arange(n, dtype=np.float32) / (n - 1)
    vertical = np.repeat(ramp[:, None], n, axis=1)
    horizontal = np.repeat(ramp[None, :], n, axis=0)
    return np.stack([vertical, horizontal])


def extend_planes_cc(base: np.ndarray) -> np.ndarray:
    """Append centred stone planes and position-index planes to a 4-plane stack."""
    base = np.asarray(base, dtype=np.float32)
    if base.shape[0] != 4:
        raise ValueError("expected a 4-channel base stack")
    n = base.shape[-1]
    centred, _ = slap_cc(base[:2])
    return np.concatenate([base, centred, position_index_planes(n)])
