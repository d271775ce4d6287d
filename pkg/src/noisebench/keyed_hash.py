"""Keyed 64-bit hash used wherever a per-utterance random choice is needed.

H(seed, key) = first 8 bytes of BLAKE2b(seed as 8 little-endian bytes || key
as UTF-8), read as an unsigned little-endian integer. Because each draw is a
pure function of (seed, key), results never depend on processing order.
"""

from __future__ import annotations

import hashlib

SEED_MAX = 2**64 - 1


def check_seed(seed: int) -> int:
    seed = int(seed)
    if not 0 <= seed <= SEED_MAX:
        raise ValueError(f"seed must be an unsigned 64-bit integer, got {seed}")
    return seed


def keyed_hash(seed: int, key: str) -> int:
    msg = check_seed(seed).to_bytes(8, "little") + key.encode("utf-8")
    return int.from_bytes(hashlib.blake2b(msg, digest_size=8).digest(), "little")
