"""Stable child-seed derivation.

A child seed is the first 8 bytes (big-endian) of
``sha256("<master>/<part1>/<part2>/...")``, so it depends only on the master
seed and the labels, never on call order or process. Generators are numpy
``PCG64`` streams seeded with that integer.
"""

from __future__ import annotations

import hashlib
import os
from typing import Optional, Union

import numpy as np

SEED_ENV_VAR = "ATBAT_MDP_SEED"

Part = Union[int, str]


def derive_seed(master: int, *parts: Part) -> int:
    text = "/".join([str(int(master))] + [str(p) for p in parts])
    return int.from_bytes(hashlib.sha256(text.encode("utf-8")).digest()[:8], "big")


def child_rng(master: int, *parts: Part) -> np.random.Generator:
    return np.random.Generator(np.random.PCG64(derive_seed(master, *parts)))


def resolve_seed(seed: Optional[int]) -> Optional[int]:
    """Explicit seed, else the ``ATBAT_MDP_SEED`` environment variable, else None."""
    if seed is not None:
        return int(seed)
    env = os.environ.get(SEED_ENV_VAR)
    if env is None or env.strip() == "":
        return None
    return int(env)
