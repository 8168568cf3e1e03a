"""Track ingestion, label pooling, segmentation, corruption, synthesis.

A track pairs mono audio with per-frame (arousal, valence) labels at a
lower rate; the audio rate must be an integer multiple of the label rate
so a label-rate mask expands cleanly onto the audio. Audio is expected to
already be at the manifest's rate (PCM16 mono WAV); resampling is out of
scope for this toolkit.
"""

from __future__ import annotations

import csv
import json
import math
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np
from scipy.io import wavfile
from scipy.signal import lfilter

from . import mask_ops
from .errors import (
    InvalidDurationError,
    InvalidRatioError,
    LengthMismatchError,
    ManifestError,
    TrackError,
)
from .mask_ops import BinaryMask
from .metrics import EmotionSeries
from .rng import SplitMix64

LABEL_CSV_HEADER = ("time_s", "arousal", "valence")
SPLITS = ("train", "validation", "test")

_PCM16_SCALE = 32767.0


@dataclass(frozen=True)
class Track:
    """Mono audio plus aligned emotion labels."""

    id: str
    audio: np.ndarray
    sample_rate: int
    labels: EmotionSeries

    def __post_init__(self):
        audio = np.asarray(self.audio, dtype=np.float64)
        if audio.ndim != 1:
            raise TrackError(f"track {self.id}: audio must be mono (1-D)")
        object.__setattr__(self, "audio", audio)
        rate_ratio(self.sample_rate, self.label_rate)
        audio_seconds = audio.shape[0] / self.sample_rate
        label_seconds = len(self.labels) / self.label_rate
        if abs(audio_seconds - label_seconds) > 1.0 / self.label_rate + 1e-9:
            raise TrackError(
                f"track {self.id}: audio ({audio_seconds:.3f}s) and labels "
                f"({label_seconds:.3f}s) differ by more than one label frame"
            )

    @property
    def label_rate(self) -> float:
        return self.labels.rate

    @property
    def n_label_frames(self) -> int:
        return len(self.labels)

    @property
    def is_empty(self) -> bool:
        return self.n_label_frames == 0 and self.audio.shape[0] == 0


@dataclass(frozen=True)
class ManifestEntry:
    id: str
    audio_path: str
    labels_path: str
    split: str

    def __post_init__(self):
        if self.split not in SPLITS:
            raise ManifestError(
                f"track {self.id}: split {self.split!r} not one of {SPLITS}"
            )


@dataclass
class Manifest:
    audio_rate: int
    label_rate: int
    tracks: list[ManifestEntry] = field(default_factory=list)
    root: Path | None = None  # directory paths are resolved against

    def __post_init__(self):
        ids = [t.id for t in self.tracks]
        if len(set(ids)) != len(ids):
            dupes = sorted({i for i in ids if ids.count(i) > 1})
            raise ManifestError(f"duplicate track ids: {dupes}")
        rate_ratio(self.audio_rate, self.label_rate)

    def split_tracks(self, split: str) -> list[ManifestEntry]:
        return [t for t in self.tracks if t.split == split]

    def resolve(self, path: str) -> Path:
        p = Path(path)
        if p.is_absolute() or self.root is None:
            return p
        return self.root / p


def rate_ratio(audio_rate, label_rate) -> int:
    """Expansion factor r = audio_rate / label_rate; must divide exactly."""
    if audio_rate <= 0 or label_rate <= 0:
        raise InvalidRatioError(
            f"rates must be positive, got {audio_rate} and {label_rate}"
        )
    r = audio_rate / label_rate
    if abs(r - round(r)) > 1e-9:
        raise InvalidRatioError(
            f"audio rate {audio_rate} is not an integer multiple of "
            f"label rate {label_rate}"
        )
    return int(round(r))


def median_pool(labels: EmotionSeries, factor: int, truncate: bool = False) -> EmotionSeries:
    """Downsample labels by per-dimension medians over blocks of ``factor``.

    Even factors take the mean of the two central order statistics. In
    strict mode (default) the length must divide exactly; with
    ``truncate=True`` a trailing partial block is discarded.
    """
    if not isinstance(factor, (int, np.integer)) or factor < 1:
        raise InvalidRatioError(f"pooling factor must be an integer >= 1, got {factor}")
    n = len(labels)
    if n % factor:
        if not truncate:
            raise InvalidDurationError(
                f"length {n} not divisible by pooling factor {factor} "
                "(pass truncate=True to drop the partial block)"
            )
        n -= n % factor
    blocks = labels.values[:n].reshape(n // factor, factor, 2)
    pooled = np.median(blocks, axis=1) if n else labels.values[:0]
    rate = labels.rate / factor
    if float(rate).is_integer():
        rate = int(rate)
    return EmotionSeries(values=pooled, rate=rate)


def segment(track: Track, seconds: float) -> list[Track]:
    """Cut a track into non-overlapping segments of fixed duration.

    The label-frame count per segment (seconds * label_rate) must be a
    whole number; the audio is cut at r times the label cut so every
    segment keeps exact alignment. A trailing partial segment is dropped.
    """
    if seconds <= 0:
        raise InvalidDurationError(f"segment duration must be positive, got {seconds}")
    labels_per_seg = seconds * track.label_rate
    if abs(labels_per_seg - round(labels_per_seg)) > 1e-9:
        raise InvalidDurationError(
            f"{seconds}s x {track.label_rate}Hz is not a whole number of label frames"
        )
    labels_per_seg = int(round(labels_per_seg))
    r = rate_ratio(track.sample_rate, track.label_rate)
    samples_per_seg = labels_per_seg * r
    n_segments = track.n_label_frames // labels_per_seg
    segments = []
    for k in range(n_segments):
        lab = track.labels.values[k * labels_per_seg : (k + 1) * labels_per_seg]
        aud = track.audio[k * samples_per_seg : (k + 1) * samples_per_seg]
        segments.append(
            Track(
                id=f"{track.id}_seg{k:03d}",
                audio=aud,
                sample_rate=track.sample_rate,
                labels=EmotionSeries(values=lab, rate=track.label_rate),
            )
        )
    return segments


def corrupt_track(track: Track, mask: BinaryMask) -> Track:
    """Drop label frames by the mask and the aligned audio blocks with them.

    The mask lives at label rate; the audio is masked by its r-fold
    expansion, so every kept label frame keeps exactly its own r samples
    and survivors stay concatenated in order. An all-zero mask yields an
    empty track (check :attr:`Track.is_empty`).
    """
    if len(mask) != track.n_label_frames:
        raise LengthMismatchError(
            f"mask length {len(mask)} != label frame count {track.n_label_frames}"
        )
    r = rate_ratio(track.sample_rate, track.label_rate)
    kept_labels = mask_ops.apply(mask, track.labels.values)
    kept_audio = mask_ops.apply(mask_ops.expand(mask, r), track.audio)
    return Track(
        id=track.id,
        audio=kept_audio,
        sample_rate=track.sample_rate,
        labels=EmotionSeries(values=kept_labels, rate=track.label_rate),
    )


# ---------------------------------------------------------------------------
# file I/O


def write_wav(path, audio: np.ndarray, sample_rate: int) -> None:
    """Write mono float audio in [-1, 1] as PCM16 little-endian WAV."""
    pcm = np.round(np.clip(audio, -1.0, 1.0) * _PCM16_SCALE).astype("<i2")
    wavfile.write(path, int(sample_rate), pcm)


def read_wav(path) -> tuple[np.ndarray, int]:
    """Read a PCM16 mono WAV back to float audio in roughly [-1, 1]."""
    sample_rate, data = wavfile.read(path)
    if data.ndim != 1:
        raise TrackError(f"{path}: expected mono audio, got shape {data.shape}")
    if data.dtype != np.int16:
        raise TrackError(f"{path}: expected PCM16 samples, got dtype {data.dtype}")
    return data.astype(np.float64) / _PCM16_SCALE, int(sample_rate)


def write_label_csv(path, labels: EmotionSeries) -> None:
    with open(path, "w", encoding="utf-8", newline="") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(LABEL_CSV_HEADER)
        for i, (a, v) in enumerate(labels.values):
            writer.writerow([repr(i / labels.rate), repr(float(a)), repr(float(v))])


def read_label_csv(path, rate) -> EmotionSeries:
    with open(path, "r", encoding="utf-8", newline="") as fh:
        reader = csv.reader(fh)
        header = next(reader, None)
        if header != list(LABEL_CSV_HEADER):
            raise ManifestError(f"{path}: expected header {LABEL_CSV_HEADER}, got {header}")
        rows = [(float(r[1]), float(r[2])) for r in reader if r]
    values = np.array(rows, dtype=np.float64).reshape(-1, 2)
    if values.size and (values.min() < -1.0 or values.max() > 1.0):
        raise ManifestError(f"{path}: label values outside [-1, 1]")
    return EmotionSeries(values=values, rate=rate)


def save_manifest(manifest: Manifest, path) -> None:
    payload = {
        "audio_rate": manifest.audio_rate,
        "label_rate": manifest.label_rate,
        "tracks": [
            {
                "id": t.id,
                "audio_path": t.audio_path,
                "labels_path": t.labels_path,
                "split": t.split,
            }
            for t in manifest.tracks
        ],
    }
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        json.dump(payload, fh, indent=2)
        fh.write("\n")


def load_manifest(path) -> Manifest:
    path = Path(path)
    try:
        payload = json.loads(path.read_text(encoding="utf-8"))
    except json.JSONDecodeError as exc:
        raise ManifestError(f"{path}: not valid JSON: {exc}") from exc
    try:
        manifest = Manifest(
            audio_rate=int(payload["audio_rate"]),
            label_rate=int(payload["label_rate"]),
            tracks=[
                ManifestEntry(
                    id=str(t["id"]),
                    audio_path=str(t["audio_path"]),
                    labels_path=str(t["labels_path"]),
                    split=str(t["split"]),
                )
                for t in payload["tracks"]
            ],
            root=path.parent,
        )
    except (KeyError, TypeError) as exc:
        raise ManifestError(f"{path}: missing or malformed field: {exc}") from exc
    for entry in manifest.tracks:
        for p in (manifest.resolve(entry.audio_path), manifest.resolve(entry.labels_path)):
            if not p.exists():
                raise ManifestError(f"{path}: referenced file missing: {p}")
    return manifest


def load_track(manifest: Manifest, entry: ManifestEntry) -> Track:
    audio, rate = read_wav(manifest.resolve(entry.audio_path))
    if rate != manifest.audio_rate:
        raise ManifestError(
            f"track {entry.id}: WAV rate {rate} != manifest audio rate "
            f"{manifest.audio_rate}"
        )
    labels = read_label_csv(manifest.resolve(entry.labels_path), manifest.label_rate)
    return Track(id=entry.id, audio=audio, sample_rate=rate, labels=labels)


def write_track_dir(directory, track: Track) -> Path:
    """Materialize a track as directory/{audio.wav,labels.csv,meta.json}.

    This is the layout handed to external predictors and emitted by
    `loss apply`.
    """
    directory = Path(directory)
    directory.mkdir(parents=True, exist_ok=True)
    write_wav(directory / "audio.wav", track.audio, track.sample_rate)
    write_label_csv(directory / "labels.csv", track.labels)
    meta = {
        "track_id": track.id,
        "audio_rate": int(track.sample_rate),
        "label_rate": track.label_rate,
        "n_label_frames": track.n_label_frames,
    }
    with open(directory / "meta.json", "w", encoding="utf-8", newline="\n") as fh:
        json.dump(meta, fh, indent=2)
        fh.write("\n")
    return directory


# ---------------------------------------------------------------------------
# synthetic corpus


@dataclass(frozen=True)
class SynthConfig:
    """Shape of a generated corpus.

    The corpus is an explicit stand-in for licensed emotion data: labels
    follow smooth low-frequency trajectories, audio is noise whose
    amplitude envelope tracks arousal and whose low-pass cutoff tracks
    valence, so the audio-to-label mapping is learnable by a small
    conv/recurrent model.
    """

    n_train: int = 0
    n_validation: int = 0
    n_test: int = 0
    seconds: float = 20.0
    audio_rate: int = 16000
    label_rate: int = 5

    def __post_init__(self):
        if min(self.n_train, self.n_validation, self.n_test) < 0:
            raise ManifestError("track counts must be >= 0")
        if self.n_tracks and self.seconds < 20:
            raise ManifestError(f"tracks must be >= 20s, got {self.seconds}")
        rate_ratio(self.audio_rate, self.label_rate)
        if self.n_tracks:
            n_labels = self.seconds * self.label_rate
            if abs(n_labels - round(n_labels)) > 1e-9:
                raise ManifestError(
                    f"{self.seconds}s is not a whole number of label frames "
                    f"at {self.label_rate}Hz"
                )

    @property
    def n_tracks(self) -> int:
        return self.n_train + self.n_validation + self.n_test


def synth_corpus(config: SynthConfig, rng: SplitMix64, out_dir) -> Manifest:
    """Generate a corpus under ``out_dir`` and return its saved manifest.

    Deterministic: one track seed is drawn from ``rng`` per track up
    front, so equal seeds give byte-identical WAV/CSV/manifest files.
    """
    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    plan = [(split, i) for split, count in zip(SPLITS, (config.n_train, config.n_validation, config.n_test)) for i in range(count)]
    track_seeds = [rng.next_u64() for _ in plan]
    entries = []
    for (split, i), track_seed in zip(plan, track_seeds):
        track_id = f"{split}_{i:02d}"
        track = _synth_track(track_id, config, SplitMix64(track_seed))
        write_wav(out_dir / f"{track_id}.wav", track.audio, config.audio_rate)
        write_label_csv(out_dir / f"{track_id}.csv", track.labels)
        entries.append(
            ManifestEntry(
                id=track_id,
                audio_path=f"{track_id}.wav",
                labels_path=f"{track_id}.csv",
                split=split,
            )
        )
    manifest = Manifest(
        audio_rate=config.audio_rate,
        label_rate=config.label_rate,
        tracks=entries,
        root=out_dir,
    )
    save_manifest(manifest, out_dir / "manifest.json")
    return manifest


def _latent(rng: SplitMix64, n_components: int = 3):
    """Smooth bounded trajectory: weighted sum of slow sinusoids."""
    freqs = np.array([0.02 + rng.next_double() * 0.10 for _ in range(n_components)])
    phases = np.array([rng.next_double() * 2 * math.pi for _ in range(n_components)])
    weights = np.array([0.5 + rng.next_double() * 0.5 for _ in range(n_components)])

    def evaluate(t: np.ndarray) -> np.ndarray:
        acc = np.zeros_like(t)
        for f, p, w in zip(freqs, phases, weights):
            acc += w * np.sin(2 * math.pi * f * t + p)
        return 0.85 * acc / weights.sum()

    return evaluate


def _synth_track(track_id: str, config: SynthConfig, rng: SplitMix64) -> Track:
    r = rate_ratio(config.audio_rate, config.label_rate)
    n_labels = int(round(config.seconds * config.label_rate))
    n_samples = n_labels * r

    arousal_fn = _latent(rng)
    valence_fn = _latent(rng)

    label_t = np.arange(n_labels) / config.label_rate
    labels = np.stack([arousal_fn(label_t), valence_fn(label_t)], axis=1)

    sample_t = np.arange(n_samples) / config.audio_rate
    envelope = 0.1 + 0.85 * (arousal_fn(sample_t) + 1.0) / 2.0

    noise = 2.0 * rng.doubles(n_samples) - 1.0

    # valence sets the one-pole low-pass cutoff per label frame; gain is
    # compensated so loudness stays an arousal-only cue
    cutoff = 200.0 * 30.0 ** ((labels[:, 1] + 1.0) / 2.0)
    alpha = 1.0 - np.exp(-2.0 * math.pi * cutoff / config.audio_rate)
    filtered = np.empty(n_samples)
    zi = np.zeros(1)
    for k in range(n_labels):
        a_k = alpha[k]
        block = noise[k * r : (k + 1) * r]
        out, zi = lfilter([a_k], [1.0, -(1.0 - a_k)], block, zi=zi)
        filtered[k * r : (k + 1) * r] = out * math.sqrt((2.0 - a_k) / a_k)

    audio = 0.35 * envelope * filtered
    return Track(
        id=track_id,
        audio=audio,
        sample_rate=config.audio_rate,
        labels=EmotionSeries(values=labels, rate=config.label_rate),
    )
