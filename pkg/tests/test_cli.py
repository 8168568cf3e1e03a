import json

import numpy as np
import pytest
from click.testing import CliRunner

from framedrop.cli import main
from framedrop.datasets import SynthConfig, load_manifest, read_wav, synth_corpus
from framedrop.mask_ops import MaskRecord, read_mask_file, serialize
from framedrop.metrics import read_emotion_csv, write_prediction_csv
from framedrop.rng import SplitMix64


@pytest.fixture
def runner():
    return CliRunner()


def invoke(runner, args, **kwargs):
    result = runner.invoke(main, args, catch_exceptions=False, **kwargs)
    assert result.exit_code == 0, result.output
    return result


class TestMaskSample:
    def test_all_keep(self, runner, tmp_path):
        out = tmp_path / "m.masks.jsonl"
        invoke(runner, ["mask", "sample", "--p-n", "1", "--p-l", "0",
                        "--len", "5", "--out", str(out)])
        (record,) = read_mask_file(out)
        assert record.bits == "11111"

    def test_absorbing_loss(self, runner, tmp_path):
        out = tmp_path / "m.masks.jsonl"
        invoke(runner, ["mask", "sample", "--p-n", "0", "--p-l", "1",
                        "--len", "4", "--out", str(out)])
        (record,) = read_mask_file(out)
        assert record.bits == "1000"

    def test_monte_carlo_mean_drop(self, runner, tmp_path):
        out = tmp_path / "m.masks.jsonl"
        invoke(runner, ["mask", "sample", "--p-n", "0.9", "--p-l", "0.5",
                        "--len", "1500", "--count", "2000", "--seed", "3",
                        "--out", str(out)])
        records = read_mask_file(out)
        assert len(records) == 2000
        drops = [r.bits.count("0") / len(r.bits) for r in records]
        assert abs(np.mean(drops) - 1 / 6) < 0.01

    def test_records_regenerate_from_their_seeds(self, runner, tmp_path):
        out = tmp_path / "m.masks.jsonl"
        invoke(runner, ["mask", "sample", "--p-n", "0.7", "--p-l", "0.3",
                        "--len", "50", "--count", "5", "--seed", "123",
                        "--out", str(out)])
        from framedrop.loss_model import LossParams, sample_mask

        for record in read_mask_file(out):
            regenerated = sample_mask(
                LossParams(record.p_n, record.p_l), len(record.bits),
                SplitMix64(record.seed),
            )
            assert regenerated.to_string() == record.bits

    def test_flag_validation(self, runner, tmp_path):
        result = runner.invoke(main, ["mask", "sample", "--p-n", "1.5", "--p-l", "0",
                                      "--len", "5", "--out", str(tmp_path / "m")])
        assert result.exit_code != 0


class TestLossApply:
    def test_all_ones_mask_keeps_labels(self, runner, tmp_path, mini_corpus):
        track_id = mini_corpus.tracks[0].id
        masks = tmp_path / "keep.masks.jsonl"
        masks.write_text(serialize(MaskRecord(track_id, 1.0, 0.0, 0, "1" * 100)) + "\n")
        out_dir = tmp_path / "out"
        invoke(runner, ["loss", "apply", "--manifest", str(mini_corpus.root / "manifest.json"),
                        "--masks", str(masks), "--out-dir", str(out_dir)])
        original = read_emotion_csv(mini_corpus.root / f"{track_id}.csv")
        corrupted = read_emotion_csv(out_dir / track_id / "labels.csv")
        assert np.array_equal(original, corrupted)

    def test_worked_example_micro_fixture(self, runner, tmp_path):
        # 4-label-frame track with r=3: mask 1011 keeps sample blocks
        # {0..2, 6..11} exactly as the expanded mask 111000111111
        corpus = tmp_path / "micro"
        from framedrop.datasets import (
            Manifest, ManifestEntry, save_manifest, write_label_csv, write_wav,
        )
        from framedrop.metrics import EmotionSeries

        corpus.mkdir()
        audio = np.linspace(-0.5, 0.5, 12)
        write_wav(corpus / "t.wav", audio, 15)
        write_label_csv(
            corpus / "t.csv",
            EmotionSeries(values=np.tile(np.linspace(-0.3, 0.3, 4)[:, None], (1, 2)), rate=5),
        )
        save_manifest(
            Manifest(audio_rate=15, label_rate=5,
                     tracks=[ManifestEntry("t", "t.wav", "t.csv", "test")], root=corpus),
            corpus / "manifest.json",
        )
        masks = tmp_path / "m.masks.jsonl"
        masks.write_text(serialize(MaskRecord("t", 0.5, 0.5, 0, "1011")) + "\n")
        out_dir = tmp_path / "out"
        invoke(runner, ["loss", "apply", "--manifest", str(corpus / "manifest.json"),
                        "--masks", str(masks), "--out-dir", str(out_dir)])
        kept, rate = read_wav(out_dir / "t" / "audio.wav")
        original, _ = read_wav(corpus / "t.wav")
        assert np.array_equal(kept, np.concatenate([original[0:3], original[6:12]]))

    def test_empty_manifest_ok(self, runner, tmp_path):
        corpus = tmp_path / "empty"
        synth_corpus(SynthConfig(), SplitMix64(0), corpus)
        masks = tmp_path / "m.masks.jsonl"
        masks.write_text("")
        out_dir = tmp_path / "out"
        invoke(runner, ["loss", "apply", "--manifest", str(corpus / "manifest.json"),
                        "--masks", str(masks), "--out-dir", str(out_dir)])
        assert not (out_dir / "manifest.json").exists()

    def test_unpaired_mask_errors(self, runner, tmp_path, mini_corpus):
        masks = tmp_path / "m.masks.jsonl"
        masks.write_text(serialize(MaskRecord("ghost", 1.0, 0.0, 0, "1")) + "\n")
        result = runner.invoke(main, ["loss", "apply",
                                      "--manifest", str(mini_corpus.root / "manifest.json"),
                                      "--masks", str(masks), "--out-dir", str(tmp_path / "o")])
        assert result.exit_code == 1
        assert "ghost" in result.output


class TestEvalCcc:
    def make_dirs(self, tmp_path, rand, n_tracks=3, perfect=True):
        ref_dir = tmp_path / "refs"
        pred_dir = tmp_path / "preds"
        ref_dir.mkdir()
        pred_dir.mkdir()
        lengths = [10, 25, 40][:n_tracks]
        for i, n in enumerate(lengths):
            values = rand.uniform(-1, 1, size=(n, 2))
            write_prediction_csv(ref_dir / f"trk{i}.csv", values)
            pred = values if perfect else values * 0.5 + 0.1
            write_prediction_csv(pred_dir / f"trk{i}.csv", pred)
        return ref_dir, pred_dir

    def test_perfect_predictions(self, runner, tmp_path, rand):
        ref_dir, pred_dir = self.make_dirs(tmp_path, rand)
        result = invoke(runner, ["eval", "ccc", "--ref-dir", str(ref_dir),
                                 "--pred-dir", str(pred_dir)])
        assert "ccc_arousal=1.0 ccc_valence=1.0 n_frames=75" in result.output

    def test_single_track_equals_ccc_op(self, runner, tmp_path, rand):
        from framedrop.metrics import ccc

        ref_dir, pred_dir = self.make_dirs(tmp_path, rand, n_tracks=1, perfect=False)
        result = invoke(runner, ["eval", "ccc", "--ref-dir", str(ref_dir),
                                 "--pred-dir", str(pred_dir)])
        ref = read_emotion_csv(ref_dir / "trk0.csv")
        pred = read_emotion_csv(pred_dir / "trk0.csv")
        assert f"ccc_arousal={ccc(ref[:, 0], pred[:, 0])!r}" in result.output

    def test_mixed_lengths_accepted(self, runner, tmp_path, rand):
        ref_dir, pred_dir = self.make_dirs(tmp_path, rand, n_tracks=3)
        result = invoke(runner, ["eval", "ccc", "--ref-dir", str(ref_dir),
                                 "--pred-dir", str(pred_dir), "--per-track"])
        assert len(result.output.strip().splitlines()) == 3

    def test_missing_prediction_errors(self, runner, tmp_path, rand):
        ref_dir, pred_dir = self.make_dirs(tmp_path, rand)
        (pred_dir / "trk1.csv").unlink()
        result = runner.invoke(main, ["eval", "ccc", "--ref-dir", str(ref_dir),
                                      "--pred-dir", str(pred_dir)])
        assert result.exit_code == 1


class TestGridAndReports:
    def test_identity_grid_all_ones(self, runner, tmp_path, mini_corpus):
        out_dir = tmp_path / "grid"
        invoke(runner, ["grid", "run", "--manifest", str(mini_corpus.root / "manifest.json"),
                        "--predictor", "identity", "--step", "0.5", "--seed", "9",
                        "--out-dir", str(out_dir)])
        from framedrop.experiments import read_results_csv

        records = read_results_csv(out_dir / "results.csv")
        assert len(records) == 9
        assert all(r.ccc_arousal == 1.0 for r in records if not r.degenerate)
        summary = json.loads((out_dir / "summary.json").read_text())
        assert summary["config"]["seed"] == 9

    def test_explicit_cells(self, runner, tmp_path, mini_corpus):
        out_dir = tmp_path / "grid"
        invoke(runner, ["grid", "run", "--manifest", str(mini_corpus.root / "manifest.json"),
                        "--cells", "0.9:0.5,0.2:0.2", "--out-dir", str(out_dir)])
        from framedrop.experiments import read_results_csv

        records = read_results_csv(out_dir / "results.csv")
        assert [(r.p_n, r.p_l) for r in records] == [(0.9, 0.5), (0.2, 0.2)]

    def test_report_emit_from_results(self, runner, tmp_path, mini_corpus):
        grid_dir = tmp_path / "grid"
        invoke(runner, ["grid", "run", "--manifest", str(mini_corpus.root / "manifest.json"),
                        "--step", "0.5", "--out-dir", str(grid_dir)])
        report_dir = tmp_path / "report"
        invoke(runner, ["report", "emit", "--results", str(grid_dir / "results.csv"),
                        "--out-dir", str(report_dir)])
        emitted = {p.name for p in report_dir.iterdir()}
        assert "heatmap_mismatched_arousal.svg" in emitted


class TestDatasetCommands:
    def test_synth_writes_manifest(self, runner, tmp_path):
        out_dir = tmp_path / "corpus"
        invoke(runner, ["dataset", "synth", "--out-dir", str(out_dir),
                        "--n-train", "1", "--n-test", "1", "--seconds", "20",
                        "--seed", "5"])
        manifest = load_manifest(out_dir / "manifest.json")
        assert len(manifest.tracks) == 2

    def test_prepare_pools_25hz_to_5hz(self, runner, tmp_path):
        corpus = tmp_path / "hi-rate"
        synth_corpus(
            SynthConfig(n_train=1, seconds=20.0, audio_rate=16000, label_rate=25),
            SplitMix64(3), corpus,
        )
        out_dir = tmp_path / "prepared"
        invoke(runner, ["dataset", "prepare", "--manifest", str(corpus / "manifest.json"),
                        "--out-dir", str(out_dir), "--label-rate", "5"])
        prepared = load_manifest(out_dir / "manifest.json")
        assert prepared.label_rate == 5
        labels = read_emotion_csv(out_dir / "train_00.csv")
        assert labels.shape == (100, 2)  # 20s at 5Hz after pooling by 5

    def test_prepare_rejects_non_divisible_rate(self, runner, tmp_path):
        corpus = tmp_path / "c"
        synth_corpus(SynthConfig(n_train=1, seconds=20.0, label_rate=25), SplitMix64(3), corpus)
        result = runner.invoke(main, ["dataset", "prepare",
                                      "--manifest", str(corpus / "manifest.json"),
                                      "--out-dir", str(tmp_path / "o"), "--label-rate", "7"])
        assert result.exit_code == 1


class TestStats:
    def test_expected_loss_symmetric(self, runner):
        result = invoke(runner, ["stats", "expected-loss", "--p-n", "0.5", "--p-l", "0.5"])
        assert result.output.strip() == "0.5"

    def test_expected_loss_sixth(self, runner):
        result = invoke(runner, ["stats", "expected-loss", "--p-n", "0.9", "--p-l", "0.5"])
        assert float(result.output) == pytest.approx(1 / 6, abs=1e-12)

    def test_degenerate_error_message(self, runner):
        result = runner.invoke(main, ["stats", "expected-loss", "--p-n", "1", "--p-l", "1"])
        assert result.exit_code == 1
        assert "undefined" in result.output


def test_version_lists_formats(runner):
    result = invoke(runner, ["--version"])
    assert "framedrop" in result.output
    assert "mask-format" in result.output
