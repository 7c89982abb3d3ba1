"""Stable seed derivation shared by every stochastic component."""

from __future__ import annotations

import hashlib

import numpy as np


def derive_seed(master: int, *keys) -> int:
    """64-bit seed determined only by ``master`` and ``keys``.

    Uses BLAKE2b over the repr of the key tuple, so the value is identical across
    processes, platforms and Python hash randomization.
    """
    digest = hashlib.blake2b(repr((int(master),) + keys).encode(), digest_size=8).digest()
    return int.from_bytes(digest, "little")


def rng_for(master: int, *keys) -> np.random.Generator:
    return np.random.Generator(np.random.PCG64(derive_seed(master, *keys)))
