"""SplitMix64 generator used everywhere randomness is needed.

The whole toolkit runs on this one small generator so that every sampled
mask, parameter draw, and synthetic track is bit-reproducible across
platforms and across independent implementations of the same file formats.
Uniform doubles are produced as ``(next_u64() >> 11) * 2**-53``, i.e. 53
random mantissa bits mapped onto [0, 1).
"""

from __future__ import annotations

import numpy as np

_MASK64 = 0xFFFFFFFFFFFFFFFF
_GOLDEN = 0x9E3779B97F4A7C15
_MIX1 = 0xBF58476D1CE4E5B9
_MIX2 = 0x94D049BB133111EB
_DOUBLE_SCALE = 2.0**-53


class SplitMix64:
    """Deterministic 64-bit generator with a single word of state.

    Equal initial state gives an identical output stream on every platform.
    Instances are cheap; derive independent streams by constructing new
    instances from derived seeds rather than sharing one across threads.
    """

    __slots__ = ("state",)

    def __init__(self, seed: int):
        self.state = seed & _MASK64

    def next_u64(self) -> int:
        self.state = (self.state + _GOLDEN) & _MASK64
        z = self.state
        z = ((z ^ (z >> 30)) * _MIX1) & _MASK64
        z = ((z ^ (z >> 27)) * _MIX2) & _MASK64
        return z ^ (z >> 31)

    def next_double(self) -> float:
        """Uniform double in [0, 1)."""
        return (self.next_u64() >> 11) * _DOUBLE_SCALE

    def doubles(self, n: int) -> np.ndarray:
        """Vector of the next ``n`` uniform doubles.

        Produces exactly the same values as ``n`` calls to
        :meth:`next_double` and leaves the state as if those calls had
        been made.
        """
        if n < 0:
            raise ValueError("n must be >= 0")
        if n == 0:
            return np.empty(0, dtype=np.float64)
        steps = np.arange(1, n + 1, dtype=np.uint64)
        states = np.uint64(self.state) + steps * np.uint64(_GOLDEN)
        self.state = int(states[-1])
        return _mix_to_doubles(states)


def _mix_u64(states: np.ndarray) -> np.ndarray:
    """Vectorized SplitMix64 output function over raw states."""
    z = states
    z = (z ^ (z >> np.uint64(30))) * np.uint64(_MIX1)
    z = (z ^ (z >> np.uint64(27))) * np.uint64(_MIX2)
    return z ^ (z >> np.uint64(31))


def _mix_to_doubles(states: np.ndarray) -> np.ndarray:
    # values below 2**53 are exact in float64
    return (_mix_u64(states) >> np.uint64(11)).astype(np.float64) * _DOUBLE_SCALE


def stream_doubles(seeds: np.ndarray, n: int) -> np.ndarray:
    """Matrix of uniforms: row i holds the first ``n`` doubles of seed i.

    Row i equals ``SplitMix64(seeds[i]).doubles(n)`` exactly; used to run
    many independent streams in parallel.
    """
    seeds = np.asarray(seeds, dtype=np.uint64)
    steps = np.arange(1, n + 1, dtype=np.uint64)
    states = seeds[:, None] + steps[None, :] * np.uint64(_GOLDEN)
    return _mix_to_doubles(states)


def derive_seed(base_seed: int, index: int) -> int:
    """Seed for the ``index``-th independent stream under ``base_seed``."""
    return (base_seed + index) & _MASK64
