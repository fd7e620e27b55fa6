"""Deterministic labeled randomness derivation.

Every random draw in a session is produced by a generator seeded from the
session seed plus a textual label naming the draw (query vector index,
randomness slot, global multiplier). Distinct labels give independent
streams, the same (seed, label) pair always reproduces the same values, and
any endpoint can derive exactly the draws it owns without coordination.
"""

from __future__ import annotations

import random


def labeled_rng(seed: int, *label) -> random.Random:
    """Generator for one labeled draw stream of a session."""
    tag = "/".join(str(part) for part in label)
    # String seeds hash through sha512 inside random.Random, so the stream
    # is stable across processes and platforms.
    return random.Random(f"{seed}|{tag}")


def draw_value(seed: int, modulus: int, *label) -> int:
    """One uniform value in [0, modulus-1] for the given label."""
    return labeled_rng(seed, *label).randrange(modulus)


def draw_nonzero(seed: int, modulus: int, *label) -> int:
    """One uniform value in [1, modulus-1] for the given label."""
    if modulus < 2:
        raise ValueError("no nonzero elements in a field of size < 2")
    return labeled_rng(seed, *label).randrange(1, modulus)


def draw_vector(seed: int, modulus: int, length: int, *label) -> list:
    """A vector of iid uniform values in [0, modulus-1] for the given label."""
    rng = labeled_rng(seed, *label)
    return [rng.randrange(modulus) for _ in range(length)]
