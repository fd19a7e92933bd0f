"""Named sub-seed derivation so one root seed drives every RNG stream."""
from __future__ import annotations

import hashlib

import numpy as np


def sub_seed(root_seed: int, *names) -> int:
    tag = "/".join(str(n) for n in (root_seed,) + names)
    digest = hashlib.sha256(tag.encode()).digest()
    return int.from_bytes(digest[:8], "little")


def sub_rng(root_seed: int, *names) -> np.random.Generator:
    return np.random.default_rng(sub_seed(root_seed, *names))
