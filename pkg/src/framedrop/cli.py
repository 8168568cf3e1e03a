"""Command-line front end: every pipeline stage as a subcommand.

All subcommands are pure functions of their flags, input files, and seed:
re-running with the same inputs produces byte-identical outputs.
"""

from __future__ import annotations

import functools
import logging
import shlex
import shutil
import sys
from pathlib import Path

import click

from . import __version__
from . import datasets, experiments, loss_model, mask_ops, metrics
from .errors import FramedropError, LengthMismatchError, PredictorError
from .rng import SplitMix64, derive_seed

log = logging.getLogger("framedrop")

_FORMAT_VERSIONS = (
    f"mask-format {mask_ops.MASK_FORMAT_VERSION}, "
    f"registry {experiments.REGISTRY_FORMAT}, "
    "results-csv 1"
)


def _friendly(fn):
    """Convert toolkit errors into clean messages on stderr, exit 1."""

    @functools.wraps(fn)
    def wrapper(*args, **kwargs):
        try:
            return fn(*args, **kwargs)
        except FramedropError as exc:
            raise click.ClickException(str(exc)) from exc

    return wrapper


def _print_version(ctx, param, value):
    if not value or ctx.resilient_parsing:
        return
    click.echo(f"framedrop {__version__} ({_FORMAT_VERSIONS})")
    ctx.exit()


@click.group()
@click.option("--version", is_flag=True, callback=_print_version,
              expose_value=False, is_eager=True, help="Print tool and format versions.")
@click.option("--quiet", is_flag=True, help="Suppress warnings.")
def main(quiet):
    logging.basicConfig(
        level=logging.ERROR if quiet else logging.WARNING,
        format="%(levelname)s: %(message)s",
        stream=sys.stderr,
    )


@main.group()
def mask():
    """Sample and inspect loss masks."""


@mask.command("sample")
@click.option("--p-n", type=float, required=True, help="Stay probability of the no-loss state.")
@click.option("--p-l", type=float, required=True, help="Stay probability of the loss state.")
@click.option("--len", "length", type=int, required=True, help="Mask length in frames.")
@click.option("--count", type=int, default=1, show_default=True, help="Number of masks.")
@click.option("--seed", type=int, default=0, show_default=True)
@click.option("--out", type=click.Path(dir_okay=False, path_type=Path), required=True)
@click.option("--track-id", default="mask", show_default=True,
              help="Record id; used as a prefix with a 5-digit index when --count > 1.")
@_friendly
def mask_sample(p_n, p_l, length, count, seed, out, track_id):
    """Sample masks from the loss chain into a .masks.jsonl file."""
    params = loss_model.LossParams(p_n=p_n, p_l=p_l)
    records = []
    for i in range(count):
        mask_seed = derive_seed(seed, i)
        bits = loss_model.sample_mask(params, length, SplitMix64(mask_seed))
        records.append(mask_ops.MaskRecord(
            track_id=track_id if count == 1 else f"{track_id}{i:05d}",
            p_n=p_n, p_l=p_l, seed=mask_seed, bits=bits.to_string(),
        ))
    out.parent.mkdir(parents=True, exist_ok=True)
    mask_ops.write_mask_file(out, records)


@main.group()
def loss():
    """Apply frame loss to datasets."""


@loss.command("apply")
@click.option("--manifest", "manifest_path", type=click.Path(exists=True, dir_okay=False, path_type=Path), required=True)
@click.option("--masks", "masks_path", type=click.Path(exists=True, dir_okay=False, path_type=Path), required=True)
@click.option("--out-dir", type=click.Path(file_okay=False, path_type=Path), required=True)
@_friendly
def loss_apply(manifest_path, masks_path, out_dir):
    """Corrupt each track with its mask record (paired by track id)."""
    manifest = datasets.load_manifest(manifest_path)
    records = mask_ops.read_mask_file(masks_path)
    by_id = {entry.id: entry for entry in manifest.tracks}
    seen = set()
    entries = []
    for record in records:
        if record.track_id in seen:
            raise PredictorError(f"duplicate mask record for track {record.track_id!r}")
        seen.add(record.track_id)
        entry = by_id.get(record.track_id)
        if entry is None:
            raise PredictorError(f"mask record {record.track_id!r} has no manifest track")
        track = datasets.load_track(manifest, entry)
        corrupted = datasets.corrupt_track(track, record.mask())
        datasets.write_track_dir(out_dir / record.track_id, corrupted)
        if corrupted.n_label_frames == 0:
            log.warning("track %s: mask dropped every frame", record.track_id)
        entries.append(datasets.ManifestEntry(
            id=entry.id,
            audio_path=f"{record.track_id}/audio.wav",
            labels_path=f"{record.track_id}/labels.csv",
            split=entry.split,
        ))
    if entries:
        corrupted_manifest = datasets.Manifest(
            audio_rate=manifest.audio_rate,
            label_rate=manifest.label_rate,
            tracks=entries,
            root=out_dir,
        )
        datasets.save_manifest(corrupted_manifest, out_dir / "manifest.json")


def _discover_series(directory: Path) -> dict[str, Path]:
    found = {}
    for path in sorted(directory.glob("*.csv")):
        found[path.stem] = path
    for path in sorted(directory.glob("*/labels.csv")):
        found.setdefault(path.parent.name, path)
    return found


@main.group()
def eval():
    """Score predictions against references."""


@eval.command("ccc")
@click.option("--ref-dir", type=click.Path(exists=True, file_okay=False, path_type=Path), required=True)
@click.option("--pred-dir", type=click.Path(exists=True, file_okay=False, path_type=Path), required=True)
@click.option("--concat/--per-track", default=True, show_default=True,
              help="Score the concatenation of all tracks or each track alone.")
@_friendly
def eval_ccc(ref_dir, pred_dir, concat):
    """CCC between reference and prediction CSVs paired by track id.

    Tracks may have different lengths (post-loss), but each prediction
    must match its own reference length.
    """
    refs = _discover_series(ref_dir)
    preds = _discover_series(pred_dir)
    if not refs:
        raise PredictorError(f"no reference CSVs found under {ref_dir}")
    missing = sorted(set(refs) - set(preds))
    if missing:
        raise PredictorError(f"missing predictions for tracks: {missing}")
    pairs = []
    for track_id in sorted(refs):
        ref = metrics.read_emotion_csv(refs[track_id])
        pred = metrics.read_emotion_csv(preds[track_id])
        if ref.shape != pred.shape:
            raise LengthMismatchError(
                f"track {track_id}: reference {ref.shape} != prediction {pred.shape}"
            )
        pairs.append((track_id, ref, pred))
    if concat:
        report = metrics.evaluate_concat([(r, p) for _, r, p in pairs])
        click.echo(
            f"ccc_arousal={report.arousal!r} ccc_valence={report.valence!r} "
            f"n_frames={report.n_frames}"
        )
    else:
        for track_id, ref, pred in pairs:
            report = metrics.evaluate_concat([(ref, pred)])
            click.echo(
                f"{track_id} ccc_arousal={report.arousal!r} "
                f"ccc_valence={report.valence!r} n_frames={report.n_frames}"
            )


@main.group()
def grid():
    """Run the (p_n, p_l) test grid."""


def _parse_cells(text: str) -> list[tuple[float, float]]:
    cells = []
    for chunk in text.split(","):
        chunk = chunk.strip()
        if not chunk:
            continue
        pn_s, _, pl_s = chunk.partition(":")
        cells.append((float(pn_s), float(pl_s)))
    return cells


def _make_predictor(spec: str, workdir=None):
    if spec == "identity":
        return experiments.IdentityPredictor()
    if spec.startswith("csv-dir:"):
        return experiments.CsvDirPredictor(spec[len("csv-dir:"):])
    if spec.startswith("exec:"):
        return experiments.ExecPredictor(shlex.split(spec[len("exec:"):]), workdir=workdir)
    raise PredictorError(
        f"unknown predictor {spec!r}; use identity, csv-dir:<path>, or exec:<command>"
    )


@grid.command("run")
@click.option("--manifest", "manifest_path", type=click.Path(exists=True, dir_okay=False, path_type=Path), required=True)
@click.option("--regime", type=click.Choice([k.value for k in experiments.RegimeKind]),
              default="mismatched", show_default=True,
              help="Setting used for model selection and record labelling.")
@click.option("--matched-pn", type=click.Choice([c.value for c in loss_model.ParamCategory]), default=None,
              help="p_n category (matched regime records only).")
@click.option("--matched-pl", type=click.Choice([c.value for c in loss_model.ParamCategory]), default=None,
              help="p_l category (matched regime records only).")
@click.option("--predictor", "predictor_spec", default="identity", show_default=True,
              help="identity | csv-dir:<path> | exec:<command>")
@click.option("--registry", "registry_path", type=click.Path(exists=True, dir_okay=False, path_type=Path), default=None)
@click.option("--step", type=float, default=0.1, show_default=True, help="Grid step size.")
@click.option("--cells", "cells_text", default=None,
              help="Explicit cells 'pn:pl,pn:pl,...' overriding --step.")
@click.option("--masks-per-cell", type=int, default=1, show_default=True)
@click.option("--seed", type=int, default=0, show_default=True)
@click.option("--clamp-pn", is_flag=True, help="Apply the training p_n floor to test cells too.")
@click.option("--jobs", type=int, default=1, show_default=True)
@click.option("--dump-corrupted", type=click.Path(file_okay=False, path_type=Path), default=None,
              help="Also write every corrupted track under this directory.")
@click.option("--out-dir", type=click.Path(file_okay=False, path_type=Path), required=True)
@_friendly
def grid_run(manifest_path, regime, matched_pn, matched_pl, predictor_spec,
             registry_path, step, cells_text, masks_per_cell, seed, clamp_pn,
             jobs, dump_corrupted, out_dir):
    """Corrupt test tracks per cell, score predictions, emit reports."""
    manifest = datasets.load_manifest(manifest_path)
    kind = experiments.RegimeKind(regime)
    if kind is experiments.RegimeKind.MATCHED:
        pn_cat = loss_model.ParamCategory(matched_pn) if matched_pn else loss_model.ParamCategory.HIGH
        pl_cat = loss_model.ParamCategory(matched_pl) if matched_pl else loss_model.ParamCategory.LOW
        regime_config = experiments.RegimeConfig.matched(pn_cat, pl_cat)
    else:
        regime_config = experiments.RegimeConfig(kind=kind)
    if cells_text:
        test_grid = experiments.TestGrid(
            cells=tuple(_parse_cells(cells_text)),
            masks_per_cell=masks_per_cell, base_seed=seed,
        )
    else:
        test_grid = experiments.TestGrid.from_step(
            step=step, masks_per_cell=masks_per_cell, base_seed=seed,
        )
    registry = experiments.load_registry(registry_path) if registry_path else None
    predictor = _make_predictor(predictor_spec)
    records = experiments.run_grid(
        test_grid, manifest, regime_config, predictor,
        registry=registry, clamp_pn=clamp_pn, jobs=jobs,
        dump_corrupted=dump_corrupted,
    )
    config_echo = {
        "manifest": str(manifest_path),
        "regime": regime,
        "predictor": predictor_spec,
        "registry": str(registry_path) if registry_path else None,
        "cells": len(test_grid.cells),
        "masks_per_cell": masks_per_cell,
        "seed": seed,
        "clamp_pn": clamp_pn,
    }
    experiments.emit_reports(records, out_dir, config_echo)


@main.group()
def report():
    """Regenerate reports from saved results."""


@report.command("emit")
@click.option("--results", "results_path", type=click.Path(exists=True, dir_okay=False, path_type=Path), required=True)
@click.option("--out-dir", type=click.Path(file_okay=False, path_type=Path), required=True)
@_friendly
def report_emit(results_path, out_dir):
    """Emit figures and summary from an existing results.csv."""
    records = experiments.read_results_csv(results_path)
    experiments.emit_reports(records, out_dir, {"results": str(results_path)})


@main.group()
def dataset():
    """Create and prepare corpora."""


@dataset.command("synth")
@click.option("--out-dir", type=click.Path(file_okay=False, path_type=Path), required=True)
@click.option("--n-train", type=int, default=0, show_default=True)
@click.option("--n-validation", type=int, default=0, show_default=True)
@click.option("--n-test", type=int, default=0, show_default=True)
@click.option("--seconds", type=float, default=60.0, show_default=True)
@click.option("--audio-rate", type=int, default=16000, show_default=True)
@click.option("--label-rate", type=int, default=5, show_default=True)
@click.option("--seed", type=int, default=0, show_default=True)
@_friendly
def dataset_synth(out_dir, n_train, n_validation, n_test, seconds, audio_rate, label_rate, seed):
    """Generate the synthetic stand-in corpus."""
    config = datasets.SynthConfig(
        n_train=n_train, n_validation=n_validation, n_test=n_test,
        seconds=seconds, audio_rate=audio_rate, label_rate=label_rate,
    )
    datasets.synth_corpus(config, SplitMix64(seed), out_dir)


@dataset.command("prepare")
@click.option("--manifest", "manifest_path", type=click.Path(exists=True, dir_okay=False, path_type=Path), required=True)
@click.option("--out-dir", type=click.Path(file_okay=False, path_type=Path), required=True)
@click.option("--label-rate", "target_rate", type=int, default=5, show_default=True,
              help="Target label rate after median pooling.")
@click.option("--truncate", is_flag=True, help="Drop a trailing partial pooling block.")
@_friendly
def dataset_prepare(manifest_path, out_dir, target_rate, truncate):
    """Median-pool labels down to the target rate; audio is copied as-is."""
    manifest = datasets.load_manifest(manifest_path)
    if manifest.label_rate % target_rate:
        raise LengthMismatchError(
            f"label rate {manifest.label_rate} not divisible by target {target_rate}"
        )
    factor = manifest.label_rate // target_rate
    out_dir.mkdir(parents=True, exist_ok=True)
    entries = []
    for entry in manifest.tracks:
        labels = datasets.read_label_csv(
            manifest.resolve(entry.labels_path), manifest.label_rate
        )
        pooled = datasets.median_pool(labels, factor, truncate=truncate)
        datasets.write_label_csv(out_dir / f"{entry.id}.csv", pooled)
        shutil.copyfile(manifest.resolve(entry.audio_path), out_dir / f"{entry.id}.wav")
        entries.append(datasets.ManifestEntry(
            id=entry.id,
            audio_path=f"{entry.id}.wav",
            labels_path=f"{entry.id}.csv",
            split=entry.split,
        ))
    prepared = datasets.Manifest(
        audio_rate=manifest.audio_rate,
        label_rate=target_rate,
        tracks=entries,
        root=out_dir,
    )
    datasets.save_manifest(prepared, out_dir / "manifest.json")


@main.group()
def stats():
    """Analytic channel statistics."""


@stats.command("expected-loss")
@click.option("--p-n", type=float, required=True)
@click.option("--p-l", type=float, required=True)
@_friendly
def stats_expected_loss(p_n, p_l):
    """Print the stationary expected fraction of dropped frames."""
    params = loss_model.LossParams(p_n=p_n, p_l=p_l)
    click.echo(repr(loss_model.expected_loss_fraction(params)))


if __name__ == "__main__":
    main()
