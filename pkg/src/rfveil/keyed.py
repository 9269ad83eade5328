"""Counter-mode deterministic generator keyed by integer hashes.

Every draw is ``mix64(seed + (counter + 1) * GOLDEN)`` where ``mix64`` is the
SplitMix64 finalizer, so any (seed, counter) cell can be computed directly and
in bulk with plain uint64 arithmetic. Not a cryptographic PRF.
"""
from __future__ import annotations

import hashlib
import struct

import numpy as np

MASK64 = (1 << 64) - 1
GOLDEN = 0x9E3779B97F4A7C15

_M1 = np.uint64(0xBF58476D1CE4E5B9)
_M2 = np.uint64(0x94D049BB133111EB)


def mix64(x) -> np.ndarray:
    """SplitMix64 finalizer on a uint64 array (wrapping arithmetic)."""
    # in-place ops on an array (0-d included) wrap silently; numpy scalars would warn
    z = np.array(x, dtype=np.uint64, copy=True)
    z ^= z >> np.uint64(30)
    z *= _M1
    z ^= z >> np.uint64(27)
    z *= _M2
    z ^= z >> np.uint64(31)
    return z


def hash_words(*words) -> np.ndarray:
    """Fold integer words (scalars or broadcastable arrays) into a uint64 hash."""
    h = np.zeros((), dtype=np.uint64)
    with np.errstate(over="ignore"):
        for w in words:
            if isinstance(w, np.ndarray):
                w = w.astype(np.uint64)
            else:
                w = np.asarray(int(w) & MASK64, dtype=np.uint64)
            h = mix64((h ^ w) + np.uint64(GOLDEN))
    return h


def _word(w) -> int:
    if isinstance(w, str):
        return int.from_bytes(hashlib.blake2b(w.encode(), digest_size=8).digest(), "little")
    if isinstance(w, float):
        return int.from_bytes(struct.pack("<d", w), "little")
    return int(w) & MASK64


def derive_seed(*words) -> int:
    """Scalar 64-bit seed from int, float or str words; used for per-trial seeds."""
    return int(hash_words(*(_word(w) for w in words)))


def counter_bits(seeds, count: int, offset: int = 0) -> np.ndarray:
    """Raw 64-bit draws, shape ``seeds.shape + (count,)``."""
    s = np.asarray(seeds, dtype=np.uint64)[..., None]
    ctr = np.arange(offset + 1, offset + count + 1, dtype=np.uint64)
    with np.errstate(over="ignore"):
        return mix64(s + ctr * np.uint64(GOLDEN))


def counter_uniforms(seeds, count: int, offset: int = 0) -> np.ndarray:
    """Uniform doubles strictly inside (0, 1) from the top 53 bits of each draw."""
    bits = counter_bits(seeds, count, offset)
    return ((bits >> np.uint64(11)).astype(np.float64) + 0.5) * 2.0 ** -53


class KeyedStream:
    """Sequential view over one counter-mode stream."""

    def __init__(self, seed: int):
        self.seed = int(seed) & MASK64
        self.position = 0

    def uniforms(self, n: int) -> np.ndarray:
        out = counter_uniforms(np.uint64(self.seed), n, self.position)
        self.position += n
        return out

    def uniform(self) -> float:
        return float(self.uniforms(1)[0])

    def bits64(self, n: int) -> list[int]:
        out = counter_bits(np.uint64(self.seed), n, self.position)
        self.position += n
        return [int(b) for b in out]
