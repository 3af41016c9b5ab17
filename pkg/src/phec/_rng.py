"""Deterministic seed derivation.

One user-facing seed fans out into named sub-streams (split, noise,
per-tree, per-node, per-epoch) so every stage is reproducible in
isolation and independent of execution schedule.
"""

from __future__ import annotations

import hashlib

import numpy as np


def subseed(seed: int, *tags) -> int:
    """Derive a child seed from ``seed`` and a tag tuple.

    Stable across processes and platforms (SHA-256 based, no reliance on
    Python hash randomization). Returns a 63-bit non-negative integer.
    """
    material = repr((int(seed),) + tags).encode("utf-8")
    digest = hashlib.sha256(material).digest()
    return int.from_bytes(digest[:8], "big") >> 1


def rng_for(seed: int, *tags) -> np.random.Generator:
    """Generator seeded from a named sub-stream of ``seed``."""
    return np.random.default_rng(subseed(seed, *tags))
