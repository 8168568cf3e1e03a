"""Binary keep/drop masks: expansion, application, drop rate, serialization.

Masks are stored at label rate only; the audio-rate mask is always derived
with :func:`expand` at use time, which keeps files ~3200x smaller and makes
audio/label alignment impossible to get wrong.
"""

from __future__ import annotations

import json
from dataclasses import dataclass
from fractions import Fraction
from typing import Iterable

import numpy as np

from .errors import (
    EmptyMaskError,
    InvalidRatioError,
    LengthMismatchError,
    MaskFormatError,
)

MASK_FILE_SUFFIX = ".masks.jsonl"
MASK_FORMAT_VERSION = 1


class BinaryMask:
    """Immutable bit sequence; 1 keeps the frame, 0 drops it."""

    __slots__ = ("bits",)

    def __init__(self, bits):
        arr = np.array(bits, dtype=np.uint8, copy=True)
        if arr.ndim != 1:
            raise MaskFormatError("mask bits must be one-dimensional")
        if arr.size and arr.max() > 1:
            raise MaskFormatError("mask bits must be 0 or 1")
        arr.setflags(write=False)
        object.__setattr__(self, "bits", arr)

    def __setattr__(self, name, value):
        raise AttributeError("BinaryMask is immutable")

    @classmethod
    def from_string(cls, s: str) -> "BinaryMask":
        if not set(s) <= {"0", "1"}:
            raise MaskFormatError(f"mask string has characters outside 0/1: {s!r}")
        return cls(np.frombuffer(s.encode("ascii"), dtype=np.uint8) - ord("0"))

    def to_string(self) -> str:
        return (self.bits + ord("0")).tobytes().decode("ascii")

    def __len__(self) -> int:
        return int(self.bits.size)

    def __eq__(self, other) -> bool:
        return isinstance(other, BinaryMask) and np.array_equal(self.bits, other.bits)

    def __hash__(self):
        return hash(self.to_string())

    def __repr__(self) -> str:
        s = self.to_string()
        if len(s) > 40:
            s = s[:37] + "..."
        return f"BinaryMask({s!r}, len={len(self)})"

    @property
    def keep_count(self) -> int:
        return int(self.bits.sum())

    @property
    def drop_count(self) -> int:
        return len(self) - self.keep_count


def expand(mask: BinaryMask, r: int) -> BinaryMask:
    """Repeat each bit ``r`` times in place: the audio-rate twin of a mask.

    Output bit j equals input bit floor(j / r), so the drop rate is
    preserved exactly and kept audio blocks stay aligned to kept labels.
    """
    if not isinstance(r, (int, np.integer)) or r < 1:
        raise InvalidRatioError(f"expansion ratio must be an integer >= 1, got {r!r}")
    return BinaryMask(np.repeat(mask.bits, r))


def apply(mask: BinaryMask, seq):
    """Keep, in order, exactly the elements whose mask bit is 1.

    ``seq`` may be a numpy array (indexed on axis 0) or any sequence.
    """
    n = seq.shape[0] if isinstance(seq, np.ndarray) else len(seq)
    if n != len(mask):
        raise LengthMismatchError(f"mask length {len(mask)} != sequence length {n}")
    keep = mask.bits.astype(bool)
    if isinstance(seq, np.ndarray):
        return seq[keep]
    kept = [x for x, k in zip(seq, keep) if k]
    return tuple(kept) if isinstance(seq, tuple) else kept


def drop_rate(mask: BinaryMask) -> Fraction:
    """Exact fraction of dropped frames (zeros / length)."""
    if len(mask) == 0:
        raise EmptyMaskError("drop rate of an empty mask is undefined")
    return Fraction(mask.drop_count, len(mask))


@dataclass(frozen=True)
class MaskRecord:
    """One sampled mask plus everything needed to regenerate it."""

    track_id: str
    p_n: float
    p_l: float
    seed: int
    bits: str

    def __post_init__(self):
        if not self.bits:
            raise MaskFormatError("mask record bits must be non-empty")
        if not set(self.bits) <= {"0", "1"}:
            raise MaskFormatError("mask record bits must be a 0/1 string")
        if not (0 <= self.seed < 2**64):
            raise MaskFormatError(f"seed {self.seed} outside unsigned 64-bit range")

    def mask(self) -> BinaryMask:
        return BinaryMask.from_string(self.bits)


def serialize(record: MaskRecord) -> str:
    """Canonical one-line JSON form (fixed key order, compact separators)."""
    payload = {
        "track_id": record.track_id,
        "p_n": record.p_n,
        "p_l": record.p_l,
        "seed": record.seed,
        "bits": record.bits,
    }
    return json.dumps(payload, separators=(",", ":"))


def parse(line: str, line_number: int | None = None) -> MaskRecord:
    """Inverse of :func:`serialize`; errors carry the offending line number."""
    try:
        obj = json.loads(line)
    except json.JSONDecodeError as exc:
        raise MaskFormatError(f"not valid JSON: {exc}", line_number) from exc
    if not isinstance(obj, dict):
        raise MaskFormatError("record is not a JSON object", line_number)
    missing = {"track_id", "p_n", "p_l", "seed", "bits"} - obj.keys()
    if missing:
        raise MaskFormatError(f"missing keys: {sorted(missing)}", line_number)
    try:
        return MaskRecord(
            track_id=str(obj["track_id"]),
            p_n=float(obj["p_n"]),
            p_l=float(obj["p_l"]),
            seed=int(obj["seed"]),
            bits=str(obj["bits"]),
        )
    except MaskFormatError as exc:
        raise MaskFormatError(str(exc), line_number) from exc
    except (TypeError, ValueError) as exc:
        raise MaskFormatError(f"bad field value: {exc}", line_number) from exc


def write_mask_file(path, records: Iterable[MaskRecord]) -> None:
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        for record in records:
            fh.write(serialize(record))
            fh.write("\n")


def read_mask_file(path) -> list[MaskRecord]:
    records = []
    with open(path, "r", encoding="utf-8") as fh:
        for i, line in enumerate(fh, start=1):
            line = line.strip()
            if not line:
                continue
            records.append(parse(line, line_number=i))
    return records
