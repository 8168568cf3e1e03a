#!/usr/bin/env python3
# Builds the synthetic stand-in corpus, shows label pooling and
# segmentation, then corrupts a track with a sampled mask.

import tempfile
from pathlib import Path

import numpy as np

from framedrop import (
    LossParams,
    SplitMix64,
    SynthConfig,
    corrupt_track,
    median_pool,
    sample_mask,
    segment,
    synth_corpus,
)
from framedrop.datasets import load_track, rate_ratio

work = Path(tempfile.mkdtemp(prefix="framedrop-demo-"))
print(f"writing corpus under {work}\n")

config = SynthConfig(n_train=2, n_test=1, seconds=40.0, audio_rate=16000, label_rate=25)
manifest = synth_corpus(config, SplitMix64(2024), work / "corpus")
print("tracks:", [(t.id, t.split) for t in manifest.tracks])

track = load_track(manifest, manifest.tracks[0])
print(f"\n{track.id}: {track.audio.shape[0]} samples at {track.sample_rate} Hz, "
      f"{track.n_label_frames} label frames at {track.label_rate} Hz")

pooled = median_pool(track.labels, 5)
print(f"median pooling by 5: {len(track.labels)} -> {len(pooled)} frames "
      f"({track.label_rate} Hz -> {pooled.rate} Hz)")

from framedrop.datasets import Track

prepared = Track(id=track.id, audio=track.audio, sample_rate=track.sample_rate,
                 labels=pooled)
segments = segment(prepared, 20.0)
print(f"segmentation into 20 s: {len(segments)} segments of "
      f"{segments[0].n_label_frames} label frames")

r = rate_ratio(prepared.sample_rate, int(prepared.label_rate))
mask = sample_mask(LossParams(0.7, 0.5), prepared.n_label_frames, SplitMix64(5))
corrupted = corrupt_track(prepared, mask)
print(f"\ncorruption with a (0.7, 0.5) mask: kept {corrupted.n_label_frames} of "
      f"{prepared.n_label_frames} label frames "
      f"and {corrupted.audio.shape[0]} of {prepared.audio.shape[0]} samples "
      f"(ratio r = {r} preserved: "
      f"{corrupted.audio.shape[0] == corrupted.n_label_frames * r})")

rms = np.sqrt(np.mean(track.audio.reshape(len(track.labels), -1) ** 2, axis=1))
corr = np.corrcoef(rms, track.labels.arousal)[0, 1]
print(f"\nloudness/arousal coupling (what a model can learn): corr = {corr:.3f}")
