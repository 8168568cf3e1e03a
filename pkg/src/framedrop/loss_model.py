"""Two-state Markov frame-loss channel.

State N keeps a frame (bit 1), state L drops it (bit 0). ``p_n`` is the
probability of staying in N, ``p_l`` of staying in L, so high ``p_n``
means a stable channel and high ``p_l`` means persistent loss bursts.
Chains start in N and emit the current state before each transition, so
the first bit of a non-empty mask is always 1.
"""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass
from typing import NamedTuple

import numpy as np

from .errors import DegenerateParamsError, InvalidParamsError
from .mask_ops import BinaryMask
from .rng import SplitMix64, derive_seed, stream_doubles

DEGENERACY_TOL = 1e-12

# values below this are clamped when sampling / classifying p_n, preventing
# parameter draws that drop nearly all training data
PN_FLOOR = 0.05

_THIRD = 1.0 / 3.0
_TWO_THIRDS = 2.0 / 3.0


@dataclass(frozen=True)
class LossParams:
    """Stay probabilities (p_n, p_l) of the loss chain."""

    p_n: float
    p_l: float

    def __post_init__(self):
        for name, value in (("p_n", self.p_n), ("p_l", self.p_l)):
            if not (0.0 <= value <= 1.0) or math.isnan(value):
                raise InvalidParamsError(f"{name}={value!r} outside [0, 1]")


class ParamCategory(enum.Enum):
    """Coarse level of a stay probability: thirds of the unit interval."""

    LOW = "low"
    MID = "mid"
    HIGH = "high"


class ParamKind(enum.Enum):
    PN = "pN"
    PL = "pL"


class Classification(NamedTuple):
    category: ParamCategory
    clamped: bool


def category_range(category: ParamCategory, kind: ParamKind) -> tuple[float, float]:
    """Value range of a category; LOW starts at PN_FLOOR for p_n."""
    if category is ParamCategory.LOW:
        lo = PN_FLOOR if kind is ParamKind.PN else 0.0
        return (lo, _THIRD)
    if category is ParamCategory.MID:
        return (_THIRD, _TWO_THIRDS)
    return (_TWO_THIRDS, 1.0)


def classify(value: float, kind: ParamKind, clamp_pn: bool = True) -> Classification:
    """Category of a probability value.

    Boundaries belong to the upper range: 1/3 is MID and 2/3 is HIGH.
    For p_n, values below PN_FLOOR are clamped up to it first and the
    clamp is flagged (clamping never changes the resulting category).
    Pass ``clamp_pn=False`` to classify raw values without flagging.
    """
    if not (0.0 <= value <= 1.0) or math.isnan(value):
        raise InvalidParamsError(f"value={value!r} outside [0, 1]")
    clamped = False
    if kind is ParamKind.PN and clamp_pn and value < PN_FLOOR:
        value = PN_FLOOR
        clamped = True
    if value < _THIRD:
        category = ParamCategory.LOW
    elif value < _TWO_THIRDS:
        category = ParamCategory.MID
    else:
        category = ParamCategory.HIGH
    return Classification(category, clamped)


def clamp_pn(value: float) -> float:
    return max(value, PN_FLOOR)


def sample_mask(params: LossParams, t: int, rng: SplitMix64) -> BinaryMask:
    """Sample a keep/drop mask of ``t`` bits by walking the chain.

    The chain starts in N and emits before transitioning, consuming
    exactly ``t - 1`` uniforms for ``t >= 1`` (none for ``t <= 1``):

        current = N
        repeat t times:
            emit 1 if current is N else 0
            u = rng.next_double()              # skipped after last emit
            if current is N: current = N if u < p_n else L
            else:            current = L if u < p_l else N
    """
    if t < 0:
        raise InvalidParamsError(f"t={t} must be >= 0")
    if t == 0:
        return BinaryMask(np.empty(0, dtype=np.uint8))
    u = rng.doubles(t - 1)
    return BinaryMask(_walk(params, u[None, :])[0])


def sample_masks(params: LossParams, t: int, n: int, base_seed: int) -> list[BinaryMask]:
    """``n`` independent masks; mask i uses a stream seeded base_seed + i.

    Bit-identical to ``sample_mask(params, t, SplitMix64(base_seed + i))``
    for each i, but vectorized across masks.
    """
    return [BinaryMask(row) for row in sample_mask_matrix(params, t, n, base_seed)]


def sample_mask_matrix(params: LossParams, t: int, n: int, base_seed: int) -> np.ndarray:
    """(n, t) uint8 matrix of masks, one per-index-derived stream per row."""
    if t < 0 or n < 0:
        raise InvalidParamsError("t and n must be >= 0")
    out = np.empty((n, t), dtype=np.uint8)
    if t == 0 or n == 0:
        return out
    # chunk so the uniform matrix stays modest even for huge Monte-Carlo runs
    chunk = max(1, 8_000_000 // max(t, 1))
    for start in range(0, n, chunk):
        stop = min(start + chunk, n)
        seeds = np.array(
            [derive_seed(base_seed, i) for i in range(start, stop)], dtype=np.uint64
        )
        u = stream_doubles(seeds, t - 1) if t > 1 else np.empty((stop - start, 0))
        out[start:stop] = _walk(params, u)
    return out


def _walk(params: LossParams, u: np.ndarray) -> np.ndarray:
    """Run the chain rowwise given per-row uniforms of shape (m, t-1)."""
    m, steps = u.shape
    bits = np.empty((m, steps + 1), dtype=np.uint8)
    bits[:, 0] = 1  # chains start in N
    in_n = np.ones(m, dtype=bool)
    for i in range(steps):
        ui = u[:, i]
        in_n = np.where(in_n, ui < params.p_n, ~(ui < params.p_l))
        bits[:, i + 1] = in_n
    return bits


def expected_loss_fraction(params: LossParams) -> float:
    """Stationary fraction of dropped frames, (1 - p_n) / (2 - p_l - p_n).

    Undefined at p_n = p_l = 1 (the chain never mixes); raises instead of
    guessing. Callers that want the start-in-N convention may special-case
    p_n = 1 as fraction 0.
    """
    denom = 2.0 - params.p_l - params.p_n
    if denom <= DEGENERACY_TOL:
        raise DegenerateParamsError(
            f"loss fraction undefined for p_n={params.p_n}, p_l={params.p_l}"
        )
    return (1.0 - params.p_n) / denom


def expected_keep_fraction(params: LossParams) -> float:
    """Stationary fraction of kept frames, (1 - p_l) / (2 - p_l - p_n)."""
    denom = 2.0 - params.p_l - params.p_n
    if denom <= DEGENERACY_TOL:
        raise DegenerateParamsError(
            f"keep fraction undefined for p_n={params.p_n}, p_l={params.p_l}"
        )
    return (1.0 - params.p_l) / denom


def sample_params(
    pn_range: tuple[float, float],
    pl_range: tuple[float, float],
    rng: SplitMix64,
) -> LossParams:
    """Uniform draw of (p_n, p_l) from closed-open ranges.

    p_n is drawn first, then p_l, from the same stream; the fixed order is
    what makes runs reproducible.
    """
    for name, (lo, hi) in (("pn_range", pn_range), ("pl_range", pl_range)):
        if not (0.0 <= lo <= hi <= 1.0):
            raise InvalidParamsError(f"{name}=({lo!r}, {hi!r}) invalid")
    pn_lo, pn_hi = pn_range
    pl_lo, pl_hi = pl_range
    p_n = pn_lo + rng.next_double() * (pn_hi - pn_lo)
    p_l = pl_lo + rng.next_double() * (pl_hi - pl_lo)
    return LossParams(p_n=p_n, p_l=p_l)
