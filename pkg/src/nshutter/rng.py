"""Counter-based random streams keyed by ``(seed, run_index)``.

Every draw is a pure function of ``(seed, run_index, draw_index)``: a
SplitMix64 finalizer applied to Weyl-sequence counters. No generator state
is shared, so runs can be evaluated in any order or in parallel.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

MASK64 = (1 << 64) - 1
GOLDEN = 0x9E3779B97F4A7C15
_M1 = 0xBF58476D1CE4E5B9
_M2 = 0x94D049BB133111EB
_TWO_M53 = 2.0 ** -53


def mix64(z: int) -> int:
    z &= MASK64
    z = ((z ^ (z >> 30)) * _M1) & MASK64
    z = ((z ^ (z >> 27)) * _M2) & MASK64
    return z ^ (z >> 31)


def _mix64_array(z: np.ndarray) -> np.ndarray:
    # uint64 arithmetic wraps modulo 2**64, matching the masked int version.
    z = z ^ (z >> np.uint64(30))
    z = z * np.uint64(_M1)
    z = z ^ (z >> np.uint64(27))
    z = z * np.uint64(_M2)
    return z ^ (z >> np.uint64(31))


def seed_key(seed: int) -> int:
    if not 0 <= seed <= MASK64:
        raise ValueError(f"seed must be an unsigned 64-bit integer, got {seed}")
    return mix64(seed + GOLDEN)


def run_key(seed: int, run_index: int) -> int:
    return mix64(seed_key(seed) + (run_index + 1) * GOLDEN)


@dataclass(frozen=True)
class RunStream:
    """Random stream for one run; ``uniform(k)`` is the k-th draw."""

    seed: int
    run_index: int

    def bits(self, draw: int) -> int:
        return mix64(run_key(self.seed, self.run_index) + (draw + 1) * GOLDEN)

    def uniform(self, draw: int) -> float:
        """Double in [0, 1) from the top 53 bits."""
        return (self.bits(draw) >> 11) * _TWO_M53


def uniform_block(seed: int, run_indices: np.ndarray, draw: int) -> np.ndarray:
    """Vectorized ``RunStream(seed, i).uniform(draw)`` for each ``i``."""
    with np.errstate(over="ignore"):
        idx = np.asarray(run_indices, dtype=np.uint64)
        keys = _mix64_array(np.uint64(seed_key(seed)) + (idx + np.uint64(1)) * np.uint64(GOLDEN))
        bits = _mix64_array(keys + np.uint64(((draw + 1) * GOLDEN) & MASK64))
    return (bits >> np.uint64(11)).astype(np.float64) * _TWO_M53
