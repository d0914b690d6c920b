"""Deterministic seed derivation.

All randomness in the toolkit flows from a single 64-bit master seed.
Each stage (and each per-video draw inside a stage) derives its own seed
by hashing ``"<master>:<label>"`` with BLAKE2b, so any stage can be
reproduced in isolation given the master seed and its label.
"""

from __future__ import annotations

import hashlib

import numpy as np


def derive_seed(seed: int, label: str) -> int:
    """Derive a stage seed from a master seed and a stage label."""
    digest = hashlib.blake2b(f"{seed}:{label}".encode(), digest_size=8).digest()
    return int.from_bytes(digest, "little")


def rng_for(seed: int, label: str) -> np.random.Generator:
    """Seeded generator for one named stage."""
    return np.random.default_rng(derive_seed(seed, label))
