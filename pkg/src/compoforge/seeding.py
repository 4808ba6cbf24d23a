"""Deterministic seed derivation.

A single run-level seed fans out into independent per-record seeds by
hashing the seed together with stable string identifiers. SHA-256 is used
instead of Python's hash() so results are identical across processes and
interpreter versions, which keeps parallel execution order-independent.
"""

from __future__ import annotations

import hashlib
import random


def derive_seed(*parts: object) -> int:
    """Return a 64-bit seed derived from the given parts.

    Parts are joined with ':' after str() conversion, so callers should pass
    stable identifiers (the run seed, a pair_id, a purpose tag).
    """
    data = ":".join(str(p) for p in parts).encode("utf-8")
    return int.from_bytes(hashlib.sha256(data).digest()[:8], "big")


def rng_for(*parts: object) -> random.Random:
    """Return a random.Random seeded via derive_seed."""
    return random.Random(derive_seed(*parts))
