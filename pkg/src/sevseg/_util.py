"""Small shared helpers: deterministic hashing, seeding and rounding."""

from __future__ import annotations

import hashlib
import math
import random
from concurrent.futures import ThreadPoolExecutor
from typing import Callable, Iterable, Sequence, TypeVar

T = TypeVar("T")
R = TypeVar("R")


def round_half_up(x: float) -> int:
    """Round to the nearest integer, halves away from zero-ward (0.5 -> 1)."""
    return math.floor(x + 0.5)


def stable_hash64(*parts: object) -> int:
    """64-bit hash of the stringified parts, stable across runs and platforms.

    Used to derive per-device and per-item seeds so shuffles and draws are
    reproducible regardless of process hash randomization.
    """
    joined = "|".join(str(p) for p in parts)
    digest = hashlib.blake2b(joined.encode("utf-8"), digest_size=8).digest()
    return int.from_bytes(digest, "big")


def derived_rng(*parts: object) -> random.Random:
    """Deterministic RNG seeded from a stable hash of the parts."""
    return random.Random(stable_hash64(*parts))


def fisher_yates(items: Sequence[T], rng: random.Random) -> list[T]:
    """Classic Fisher-Yates shuffle driven by the given RNG (input untouched)."""
    out = list(items)
    for i in range(len(out) - 1, 0, -1):
        j = rng.randrange(i + 1)
        out[i], out[j] = out[j], out[i]
    return out


def map_jobs(fn: Callable[[T], R], items: Iterable[T], jobs: int = 1) -> list[R]:
    """Apply fn over items, optionally with a thread pool; output order is fixed."""
    seq = list(items)
    if jobs <= 1 or len(seq) <= 1:
        return [fn(x) for x in seq]
    with ThreadPoolExecutor(max_workers=jobs) as pool:
        return list(pool.map(fn, seq))
