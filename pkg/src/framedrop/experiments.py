"""Training regimes, the (p_n, p_l) test grid, and report emission.

Four regimes describe how much the training channel knows about the test
channel: mismatched trains clean, multi-conditions trains across the whole
parameter box, matched trains one model per (category, category) pair and
picks the matching one at test time, and augmentation reuses the matched
(high p_n, low p_l) model everywhere as a cheap robustness trick.
"""

from __future__ import annotations

import csv
import enum
import json
import logging
import math
import subprocess
import tempfile
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from . import __version__
from .datasets import Manifest, Track, corrupt_track, load_track, write_track_dir
from .errors import (
    DegenerateSeriesError,
    InvalidParamsError,
    MissingModelError,
    PredictorError,
)
from .loss_model import (
    LossParams,
    ParamCategory,
    ParamKind,
    category_range,
    classify,
    sample_mask,
    sample_params,
)
from .mask_ops import drop_rate
from .metrics import evaluate_concat, read_emotion_csv
from .rng import SplitMix64

log = logging.getLogger(__name__)

REGISTRY_FORMAT = "framedrop-registry/1"
RESULTS_CSV_HEADER = (
    "setting",
    "model_id",
    "p_n",
    "p_l",
    "seed",
    "drop_rate",
    "ccc_arousal",
    "ccc_valence",
    "degenerate",
)

_CELL_STRIDE = 2**40
_MASK_STRIDE = 2**20


class RegimeKind(enum.Enum):
    MISMATCHED = "mismatched"
    MULTI = "multi"
    MATCHED = "matched"
    AUGMENTATION = "augmentation"


MULTI_PN_RANGE = (0.05, 1.0)
MULTI_PL_RANGE = (0.0, 1.0)


@dataclass(frozen=True)
class RegimeConfig:
    """A training environment: which loss parameters batches draw from."""

    kind: RegimeKind
    pn_category: ParamCategory | None = None
    pl_category: ParamCategory | None = None
    pn_range: tuple[float, float] | None = None
    pl_range: tuple[float, float] | None = None

    def __post_init__(self):
        if self.kind is RegimeKind.MATCHED:
            if self.pn_category is None or self.pl_category is None:
                raise InvalidParamsError("matched regime needs both categories")
        elif self.pn_category is not None or self.pl_category is not None:
            raise InvalidParamsError(f"{self.kind.value} regime takes no categories")
        if self.kind is not RegimeKind.MULTI and (
            self.pn_range is not None or self.pl_range is not None
        ):
            raise InvalidParamsError(f"{self.kind.value} regime takes no ranges")

    @classmethod
    def mismatched(cls) -> "RegimeConfig":
        return cls(kind=RegimeKind.MISMATCHED)

    @classmethod
    def multi(cls, pn_range=MULTI_PN_RANGE, pl_range=MULTI_PL_RANGE) -> "RegimeConfig":
        return cls(kind=RegimeKind.MULTI, pn_range=pn_range, pl_range=pl_range)

    @classmethod
    def matched(cls, pn_category: ParamCategory, pl_category: ParamCategory) -> "RegimeConfig":
        return cls(kind=RegimeKind.MATCHED, pn_category=pn_category, pl_category=pl_category)

    @classmethod
    def augmentation(cls) -> "RegimeConfig":
        # trains exactly like matched (high p_n, low p_l): mild loss only
        return cls(kind=RegimeKind.AUGMENTATION)


def plan_batch_params(regime: RegimeConfig, rng: SplitMix64) -> LossParams | None:
    """Loss parameters for one training batch, or None for a clean batch.

    One fresh draw per batch; the single mask sampled from it is shared by
    every example in the batch.
    """
    if regime.kind is RegimeKind.MISMATCHED:
        return None
    if regime.kind is RegimeKind.MULTI:
        pn_range = regime.pn_range if regime.pn_range is not None else MULTI_PN_RANGE
        pl_range = regime.pl_range if regime.pl_range is not None else MULTI_PL_RANGE
        return sample_params(pn_range, pl_range, rng)
    if regime.kind is RegimeKind.MATCHED:
        pn_cat, pl_cat = regime.pn_category, regime.pl_category
    else:  # augmentation: mild loss, high p_n / low p_l
        pn_cat, pl_cat = ParamCategory.HIGH, ParamCategory.LOW
    return sample_params(
        category_range(pn_cat, ParamKind.PN),
        category_range(pl_cat, ParamKind.PL),
        rng,
    )


# ---------------------------------------------------------------------------
# model registry


@dataclass
class ModelRegistry:
    """Maps setting keys to model checkpoint paths."""

    models: dict[str, str]
    root: Path | None = None

    def resolve(self, key: str) -> str:
        if key not in self.models:
            raise MissingModelError(f"registry has no model for key {key!r}")
        path = Path(self.models[key])
        if not path.is_absolute() and self.root is not None:
            path = self.root / path
        return str(path)


def matched_key(pn_category: ParamCategory, pl_category: ParamCategory) -> str:
    return f"matched/{pn_category.value}_{pl_category.value}"


def required_registry_keys(kind: RegimeKind) -> list[str]:
    if kind is RegimeKind.MATCHED:
        return [matched_key(pn, pl) for pn in ParamCategory for pl in ParamCategory]
    return [kind.value]


def load_registry(path) -> ModelRegistry:
    path = Path(path)
    payload = json.loads(path.read_text(encoding="utf-8"))
    if payload.get("format") != REGISTRY_FORMAT:
        raise MissingModelError(
            f"{path}: unknown registry format {payload.get('format')!r}"
        )
    return ModelRegistry(models=dict(payload["models"]), root=path.parent)


def save_registry(registry: ModelRegistry, path) -> None:
    payload = {"format": REGISTRY_FORMAT, "models": registry.models}
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        json.dump(payload, fh, indent=2)
        fh.write("\n")


def select_model(
    kind: RegimeKind,
    cell: tuple[float, float],
    registry: ModelRegistry,
) -> str:
    """Registry key of the model a setting deploys at a test cell.

    Only the matched setting looks at the cell: it classifies both
    parameters (p_n clamped up to its floor first) and picks the model of
    that category pair. The other settings always use their single model.
    """
    if kind is not RegimeKind.MATCHED:
        key = kind.value
    else:
        p_n, p_l = cell
        key = matched_key(
            classify(p_n, ParamKind.PN).category,
            classify(p_l, ParamKind.PL).category,
        )
    if key not in registry.models:
        raise MissingModelError(f"registry has no model for key {key!r}")
    return key


# ---------------------------------------------------------------------------
# test grid


@dataclass(frozen=True)
class TestGrid:
    """The set of (p_n, p_l) cells every setting is evaluated on."""

    __test__ = False  # not a pytest class, despite the name

    cells: tuple
    masks_per_cell: int = 1
    base_seed: int = 0

    def __post_init__(self):
        cells = tuple((float(pn), float(pl)) for pn, pl in self.cells)
        for pn, pl in cells:
            if not (0.0 <= pn <= 1.0 and 0.0 <= pl <= 1.0):
                raise InvalidParamsError(f"cell ({pn}, {pl}) outside the unit square")
        if len(set(cells)) != len(cells):
            raise InvalidParamsError("grid cells must be unique")
        if self.masks_per_cell < 1:
            raise InvalidParamsError("masks_per_cell must be >= 1")
        object.__setattr__(self, "cells", cells)

    @classmethod
    def from_step(cls, step: float = 0.1, masks_per_cell: int = 1, base_seed: int = 0) -> "TestGrid":
        """Uniform grid over [0,1]^2; step snaps to an integer subdivision."""
        if not (0 < step <= 1):
            raise InvalidParamsError(f"step must be in (0, 1], got {step}")
        divisions = max(1, round(1.0 / step))
        values = [i / divisions for i in range(divisions + 1)]
        cells = [(pn, pl) for pn in values for pl in values]
        return cls(cells=tuple(cells), masks_per_cell=masks_per_cell, base_seed=base_seed)


def cell_track_seed(base_seed: int, cell_index: int, track_index: int, mask_index: int = 0) -> int:
    """Per-(cell, track, mask) stream seed.

    base_seed XOR (cell_index * 2^40 + mask_index * 2^20 + track_index);
    with one mask per cell this is base_seed XOR (cell_index * 2^40 +
    track_index).
    """
    offset = cell_index * _CELL_STRIDE + mask_index * _MASK_STRIDE + track_index
    return (base_seed ^ offset) & 0xFFFFFFFFFFFFFFFF


# ---------------------------------------------------------------------------
# predictors


@dataclass(frozen=True)
class PredictionContext:
    """Where we are in the grid when a prediction is requested."""

    cell_index: int
    track_index: int
    mask_index: int
    masks_per_cell: int

    @property
    def cell_tag(self) -> str:
        return f"cell_{self.cell_index:03d}"

    def prediction_name(self, track_id: str) -> str:
        if self.masks_per_cell > 1:
            return f"{track_id}_m{self.mask_index}.csv"
        return f"{track_id}.csv"


class IdentityPredictor:
    """Oracle that returns the surviving reference labels unchanged."""

    name = "identity"

    def predict(self, track: Track, model_ref: str | None, ctx: PredictionContext) -> np.ndarray:
        return track.labels.values.copy()


class CsvDirPredictor:
    """Reads precomputed predictions from <root>/<cell_tag>/<track_id>.csv."""

    name = "csv-dir"

    def __init__(self, root):
        self.root = Path(root)

    def predict(self, track: Track, model_ref: str | None, ctx: PredictionContext) -> np.ndarray:
        path = self.root / ctx.cell_tag / ctx.prediction_name(track.id)
        if not path.exists():
            raise PredictorError(f"missing prediction file {path}")
        return read_emotion_csv(path)


class ExecPredictor:
    """Spawns an external model: <argv> predict <ckpt> <track_dir> <out_csv>.

    The corrupted track is materialized as a directory holding audio.wav,
    labels.csv, and meta.json; the command must write one
    frame_index,arousal,valence row per surviving label frame.
    """

    name = "exec"

    def __init__(self, argv: list[str], workdir=None):
        if not argv:
            raise PredictorError("exec predictor needs a command")
        self.argv = list(argv)
        self._tmp = None
        if workdir is None:
            self._tmp = tempfile.TemporaryDirectory(prefix="framedrop-exec-")
            workdir = self._tmp.name
        self.workdir = Path(workdir)

    def predict(self, track: Track, model_ref: str | None, ctx: PredictionContext) -> np.ndarray:
        if model_ref is None:
            raise PredictorError("exec predictor needs a model registry")
        stem = ctx.prediction_name(track.id)[: -len(".csv")]
        track_dir = self.workdir / ctx.cell_tag / stem
        write_track_dir(track_dir, track)
        out_csv = track_dir / "prediction.csv"
        argv = self.argv + ["predict", str(model_ref), str(track_dir), str(out_csv)]
        proc = subprocess.run(argv, capture_output=True, text=True)
        if proc.returncode != 0:
            tail = proc.stderr.strip().splitlines()[-5:]
            raise PredictorError(
                f"{argv[0]} exited with {proc.returncode}: " + " | ".join(tail)
            )
        if not out_csv.exists():
            raise PredictorError(f"{argv[0]} wrote no prediction file {out_csv}")
        return read_emotion_csv(out_csv)


# ---------------------------------------------------------------------------
# grid runner


@dataclass(frozen=True)
class ResultRecord:
    """One evaluated (setting, grid cell)."""

    setting: str
    model_id: str
    p_n: float
    p_l: float
    seed: int
    realized_drop_rate: float
    ccc_arousal: float
    ccc_valence: float
    degenerate: bool = False


def run_grid(
    grid: TestGrid,
    manifest: Manifest,
    regime: RegimeConfig,
    predictor,
    registry: ModelRegistry | None = None,
    clamp_pn: bool = False,
    jobs: int = 1,
    dump_corrupted: Path | None = None,
) -> list[ResultRecord]:
    """Evaluate one setting over every grid cell.

    Per cell and test track, a fresh mask is sampled from a seed derived
    from (base_seed, cell index, track index), the track is corrupted,
    the predictor scores the survivors, and CCC is computed once on the
    concatenation of all tracks. Cells where everything is dropped are
    recorded with a degenerate flag instead of aborting the run.

    ``clamp_pn`` applies the training-time floor on p_n to test cells as
    well; the default leaves test cells unclamped.
    """
    test_entries = manifest.split_tracks("test")
    if not test_entries:
        raise PredictorError("manifest has no test tracks")
    if registry is not None:
        missing = [k for k in required_registry_keys(regime.kind) if k not in registry.models]
        if missing:
            raise MissingModelError(f"registry missing keys: {missing}")
    tracks = [load_track(manifest, entry) for entry in test_entries]

    def run_cell(item) -> ResultRecord:
        cell_index, (p_n, p_l) = item
        if registry is not None:
            model_id = select_model(regime.kind, (p_n, p_l), registry)
            model_ref = registry.resolve(model_id)
        else:
            model_id = predictor.name
            model_ref = None
        mask_params = LossParams(max(p_n, 0.05) if clamp_pn else p_n, p_l)
        pairs = []
        total_labels = 0
        total_dropped = 0
        for track_index, track in enumerate(tracks):
            for mask_index in range(grid.masks_per_cell):
                seed = cell_track_seed(grid.base_seed, cell_index, track_index, mask_index)
                mask = sample_mask(mask_params, track.n_label_frames, SplitMix64(seed))
                total_labels += len(mask)
                total_dropped += mask.drop_count
                corrupted = corrupt_track(track, mask)
                ctx = PredictionContext(cell_index, track_index, mask_index, grid.masks_per_cell)
                if dump_corrupted is not None:
                    stem = ctx.prediction_name(track.id)[: -len(".csv")]
                    write_track_dir(Path(dump_corrupted) / ctx.cell_tag / stem, corrupted)
                if corrupted.n_label_frames == 0:
                    log.warning(
                        "cell %d (p_n=%g, p_l=%g): track %s fully dropped, excluded",
                        cell_index, p_n, p_l, track.id,
                    )
                    continue
                pred = predictor.predict(corrupted, model_ref, ctx)
                pred = np.asarray(pred, dtype=np.float64)
                if pred.shape != corrupted.labels.values.shape:
                    raise PredictorError(
                        f"cell {cell_index}, track {track.id}: prediction shape "
                        f"{pred.shape} != surviving labels {corrupted.labels.values.shape}"
                    )
                pairs.append((corrupted.labels.values, pred))
        realized = total_dropped / total_labels if total_labels else 1.0
        kept_frames = sum(len(ref) for ref, _ in pairs)
        if not pairs or kept_frames < 2:
            log.warning("cell %d (p_n=%g, p_l=%g): degenerate, everything dropped",
                        cell_index, p_n, p_l)
            return ResultRecord(
                setting=regime.kind.value, model_id=model_id, p_n=p_n, p_l=p_l,
                seed=grid.base_seed, realized_drop_rate=realized,
                ccc_arousal=math.nan, ccc_valence=math.nan, degenerate=True,
            )
        try:
            report = evaluate_concat(pairs)
        except DegenerateSeriesError:
            return ResultRecord(
                setting=regime.kind.value, model_id=model_id, p_n=p_n, p_l=p_l,
                seed=grid.base_seed, realized_drop_rate=realized,
                ccc_arousal=math.nan, ccc_valence=math.nan, degenerate=True,
            )
        return ResultRecord(
            setting=regime.kind.value, model_id=model_id, p_n=p_n, p_l=p_l,
            seed=grid.base_seed, realized_drop_rate=realized,
            ccc_arousal=report.arousal, ccc_valence=report.valence,
        )

    items = list(enumerate(grid.cells))
    if jobs > 1:
        with ThreadPoolExecutor(max_workers=jobs) as pool:
            return list(pool.map(run_cell, items))
    return [run_cell(item) for item in items]


# ---------------------------------------------------------------------------
# results + reports


def write_results_csv(path, records: list[ResultRecord]) -> None:
    with open(path, "w", encoding="utf-8", newline="") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(RESULTS_CSV_HEADER)
        for r in records:
            writer.writerow([
                r.setting,
                r.model_id,
                repr(r.p_n),
                repr(r.p_l),
                r.seed,
                repr(float(r.realized_drop_rate)),
                "" if r.degenerate else repr(r.ccc_arousal),
                "" if r.degenerate else repr(r.ccc_valence),
                "true" if r.degenerate else "false",
            ])


def read_results_csv(path) -> list[ResultRecord]:
    records = []
    with open(path, "r", encoding="utf-8", newline="") as fh:
        reader = csv.reader(fh)
        header = next(reader, None)
        if header != list(RESULTS_CSV_HEADER):
            raise PredictorError(f"{path}: unexpected results header {header}")
        for row in reader:
            if not row:
                continue
            degenerate = row[8] == "true"
            records.append(ResultRecord(
                setting=row[0],
                model_id=row[1],
                p_n=float(row[2]),
                p_l=float(row[3]),
                seed=int(row[4]),
                realized_drop_rate=float(row[5]),
                ccc_arousal=math.nan if degenerate else float(row[6]),
                ccc_valence=math.nan if degenerate else float(row[7]),
                degenerate=degenerate,
            ))
    return records


_DIMS = ("arousal", "valence")


def emit_reports(records: list[ResultRecord], out_dir, config_echo: dict | None = None) -> list[Path]:
    """Write results.csv, summary.json, and the SVG figures.

    Produces one CCC-vs-drop-rate line chart per emotion dimension (one
    series per setting) and one (p_n, p_l) heatmap per setting and
    dimension. Degenerate cells render as missing, not as zero.
    """
    if not records:
        raise PredictorError("no records to report")
    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    written = []

    results_path = out_dir / "results.csv"
    write_results_csv(results_path, records)
    written.append(results_path)

    summary_path = out_dir / "summary.json"
    summary = {
        "tool": "framedrop",
        "version": __version__,
        "config": config_echo or {},
        "n_records": len(records),
        "n_degenerate": sum(r.degenerate for r in records),
        "settings": sorted({r.setting for r in records}),
    }
    with open(summary_path, "w", encoding="utf-8", newline="\n") as fh:
        json.dump(summary, fh, indent=2)
        fh.write("\n")
    written.append(summary_path)

    written.extend(_emit_figures(records, out_dir))
    return written


def _emit_figures(records: list[ResultRecord], out_dir: Path) -> list[Path]:
    import matplotlib
    matplotlib.use("Agg")
    import matplotlib.pyplot as plt

    rc = {"svg.hashsalt": "framedrop", "svg.fonttype": "none"}
    settings = sorted({r.setting for r in records})
    written = []
    with plt.rc_context(rc):
        for dim in _DIMS:
            fig, ax = plt.subplots(figsize=(6.0, 4.0))
            for setting in settings:
                pts = sorted(
                    (r.realized_drop_rate, getattr(r, f"ccc_{dim}"))
                    for r in records
                    if r.setting == setting and not r.degenerate
                )
                if pts:
                    xs, ys = zip(*pts)
                    ax.plot(xs, ys, marker="o", markersize=3, linewidth=1, label=setting)
            ax.set_xlabel("realized frame-drop rate")
            ax.set_ylabel(f"CCC ({dim})")
            ax.set_xlim(-0.02, 1.02)
            ax.legend(loc="lower left", fontsize=8)
            ax.grid(True, alpha=0.3)
            path = out_dir / f"ccc_vs_drop_{dim}.svg"
            fig.savefig(path, format="svg", metadata={"Date": None})
            plt.close(fig)
            written.append(path)

        for setting in settings:
            sub = [r for r in records if r.setting == setting]
            pn_values = sorted({r.p_n for r in sub})
            pl_values = sorted({r.p_l for r in sub})
            index = {(r.p_n, r.p_l): r for r in sub}
            for dim in _DIMS:
                grid = np.full((len(pl_values), len(pn_values)), np.nan)
                for i, pl_v in enumerate(pl_values):
                    for j, pn_v in enumerate(pn_values):
                        r = index.get((pn_v, pl_v))
                        if r is not None and not r.degenerate:
                            grid[i, j] = getattr(r, f"ccc_{dim}")
                fig, ax = plt.subplots(figsize=(5.0, 4.2))
                masked = np.ma.masked_invalid(grid)
                cmap = plt.get_cmap("viridis").copy()
                cmap.set_bad("lightgray")
                im = ax.imshow(
                    masked, origin="lower", aspect="auto", cmap=cmap,
                    vmin=-1.0, vmax=1.0,
                    extent=(-0.5, len(pn_values) - 0.5, -0.5, len(pl_values) - 0.5),
                )
                ax.set_xticks(range(len(pn_values)))
                ax.set_xticklabels([f"{v:g}" for v in pn_values], fontsize=7)
                ax.set_yticks(range(len(pl_values)))
                ax.set_yticklabels([f"{v:g}" for v in pl_values], fontsize=7)
                ax.set_xlabel("p_n (stay no-loss)")
                ax.set_ylabel("p_l (stay loss)")
                ax.set_title(f"CCC {dim} - {setting}", fontsize=10)
                fig.colorbar(im, ax=ax)
                path = out_dir / f"heatmap_{setting}_{dim}.svg"
                fig.savefig(path, format="svg", metadata={"Date": None})
                plt.close(fig)
                written.append(path)
    return written
