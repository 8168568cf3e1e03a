"""Concordance correlation coefficient and the concatenated-track protocol.

CCC = 2*cov(x, y) / (var(x) + var(y) + (mean(x) - mean(y))^2) with
population (1/n) moments throughout. Unlike Pearson correlation it
penalizes mean and scale disagreement, so a prediction that is merely a
shifted copy of the reference scores below 1.
"""

from __future__ import annotations

import csv
from dataclasses import dataclass
from typing import Sequence

import numpy as np

from .errors import DegenerateSeriesError, LengthMismatchError, ShapeMismatchError

DEGENERACY_TOL = 1e-12

# stabilizer added to the denominator when CCC is used inside a training
# loss; keeps the loss finite on constant outputs instead of erroring
LOSS_EPS = 1e-8

PREDICTION_CSV_HEADER = ("frame_index", "arousal", "valence")


@dataclass(frozen=True)
class EmotionSeries:
    """Per-frame (arousal, valence) values at a fixed rate in Hz."""

    values: np.ndarray  # shape (n, 2)
    rate: float

    def __post_init__(self):
        values = np.asarray(self.values, dtype=np.float64)
        if values.ndim != 2 or values.shape[1] != 2:
            raise ShapeMismatchError(
                f"emotion series must have shape (n, 2), got {values.shape}"
            )
        if values.size and not np.all(np.isfinite(values)):
            raise ShapeMismatchError("emotion series contains non-finite values")
        if self.rate <= 0:
            raise ShapeMismatchError(f"rate must be positive, got {self.rate}")
        object.__setattr__(self, "values", values)

    def __len__(self) -> int:
        return int(self.values.shape[0])

    @property
    def arousal(self) -> np.ndarray:
        return self.values[:, 0]

    @property
    def valence(self) -> np.ndarray:
        return self.values[:, 1]

    @property
    def seconds(self) -> float:
        return len(self) / self.rate


@dataclass(frozen=True)
class CccReport:
    """Per-dimension CCC over some set of frames."""

    arousal: float
    valence: float
    n_frames: int


def ccc(x, y) -> float:
    """Concordance correlation coefficient of two equal-length sequences.

    Raises :class:`DegenerateSeriesError` when both sequences are constant
    with equal means (denominator below tolerance): evaluation must not
    silently score pathological predictions.
    """
    x = np.asarray(x, dtype=np.float64)
    y = np.asarray(y, dtype=np.float64)
    if x.ndim != 1 or y.ndim != 1:
        raise ShapeMismatchError("ccc expects one-dimensional sequences")
    if x.shape[0] != y.shape[0]:
        raise LengthMismatchError(f"length mismatch: {x.shape[0]} != {y.shape[0]}")
    if x.shape[0] < 2:
        raise LengthMismatchError("ccc needs at least 2 frames")
    mean_x = x.mean()
    mean_y = y.mean()
    dx = x - mean_x
    dy = y - mean_y
    var_x = np.mean(dx * dx)
    var_y = np.mean(dy * dy)
    cov = np.mean(dx * dy)
    denom = var_x + var_y + (mean_x - mean_y) ** 2
    if denom < DEGENERACY_TOL:
        raise DegenerateSeriesError(
            "ccc undefined: both sequences constant with equal means"
        )
    return float(2.0 * cov / denom)


def ccc_loss(refs, preds) -> float:
    """1 - mean CCC over (example, dimension) cells of a batch.

    ``refs`` and ``preds`` are (batch, time, dims) arrays (or lists of
    equal-shape (time, dims) arrays). CCC runs along the time axis of each
    cell; the denominator is stabilized with ``LOSS_EPS`` so constant
    outputs yield a finite loss during training.
    """
    refs = np.asarray(refs, dtype=np.float64)
    preds = np.asarray(preds, dtype=np.float64)
    if refs.shape != preds.shape:
        raise ShapeMismatchError(f"shape mismatch: {refs.shape} != {preds.shape}")
    if refs.ndim != 3:
        raise ShapeMismatchError(
            f"expected (batch, time, dims) arrays, got shape {refs.shape}"
        )
    if refs.shape[1] < 2:
        raise ShapeMismatchError("every series needs at least 2 frames")
    mean_r = refs.mean(axis=1, keepdims=True)
    mean_p = preds.mean(axis=1, keepdims=True)
    var_r = ((refs - mean_r) ** 2).mean(axis=1)
    var_p = ((preds - mean_p) ** 2).mean(axis=1)
    cov = ((refs - mean_r) * (preds - mean_p)).mean(axis=1)
    denom = var_r + var_p + (mean_r[:, 0, :] - mean_p[:, 0, :]) ** 2 + LOSS_EPS
    return float(1.0 - np.mean(2.0 * cov / denom))


def evaluate_concat(pairs: Sequence[tuple]) -> CccReport:
    """CCC per dimension over the concatenation of (ref, pred) pairs.

    This is the track-level evaluation protocol: tracks may have different
    lengths after frame loss, so all references are concatenated in
    manifest order, likewise all predictions, and CCC is computed once per
    dimension on the concatenation (not averaged per track).
    """
    if not pairs:
        raise LengthMismatchError("evaluate_concat needs at least one pair")
    refs = []
    preds = []
    for i, (ref, pred) in enumerate(pairs):
        ref = _as_values(ref)
        pred = _as_values(pred)
        if ref.shape != pred.shape:
            raise LengthMismatchError(
                f"pair {i}: ref shape {ref.shape} != pred shape {pred.shape}"
            )
        refs.append(ref)
        preds.append(pred)
    ref_all = np.concatenate(refs, axis=0)
    pred_all = np.concatenate(preds, axis=0)
    if ref_all.shape[0] < 2:
        raise LengthMismatchError("concatenation has fewer than 2 frames")
    return CccReport(
        arousal=ccc(ref_all[:, 0], pred_all[:, 0]),
        valence=ccc(ref_all[:, 1], pred_all[:, 1]),
        n_frames=int(ref_all.shape[0]),
    )


def _as_values(series) -> np.ndarray:
    if isinstance(series, EmotionSeries):
        return series.values
    arr = np.asarray(series, dtype=np.float64)
    if arr.ndim != 2 or arr.shape[1] != 2:
        raise ShapeMismatchError(f"expected (n, 2) values, got shape {arr.shape}")
    return arr


def overlap_rate(kernel_size: int, pool_size: int) -> float:
    """Receptive-field overlap (K - 1) / (K + P - 1) of a conv+pool block."""
    if kernel_size < 1 or pool_size < 1:
        raise ShapeMismatchError("kernel and pool sizes must be >= 1")
    return (kernel_size - 1) / (kernel_size + pool_size - 1)


def write_prediction_csv(path, values: np.ndarray) -> None:
    """Write (n, 2) values as `frame_index,arousal,valence` rows."""
    values = np.asarray(values, dtype=np.float64)
    if values.ndim != 2 or values.shape[1] != 2:
        raise ShapeMismatchError(f"expected (n, 2) values, got shape {values.shape}")
    with open(path, "w", encoding="utf-8", newline="") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(PREDICTION_CSV_HEADER)
        for i, (a, v) in enumerate(values):
            writer.writerow([i, repr(float(a)), repr(float(v))])


def read_emotion_csv(path) -> np.ndarray:
    """Read (n, 2) values from a prediction or label CSV.

    Accepts both exchange schemas: `frame_index,arousal,valence` and
    `time_s,arousal,valence`; the leading column is ignored either way.
    """
    with open(path, "r", encoding="utf-8", newline="") as fh:
        reader = csv.reader(fh)
        header = next(reader, None)
        if header is None or len(header) != 3 or header[1:] != ["arousal", "valence"]:
            raise ShapeMismatchError(
                f"{path}: expected header ending in arousal,valence, got {header}"
            )
        rows = [(float(row[1]), float(row[2])) for row in reader if row]
    return np.array(rows, dtype=np.float64).reshape(-1, 2)
