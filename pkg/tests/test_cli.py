from __future__ import annotations

from pathlib import Path

import numpy as np
import orjson
import pandas as pd
import pytest

from spkmargin.checkpoint import SpeakerModel, save_checkpoint
from spkmargin.commands.extract import cmd_extract, skipped_report_path
from spkmargin.dataio import FeatureArchive, Utterance, read_archive, write_archive
from spkmargin.domain.configs import LossConfig, NetworkConfig
from spkmargin.main import main
from spkmargin.numeric import Rng

TINY_TOML = """\
seed = 4
feat_dim = 10
n_train_speakers = 6
n_eval_speakers = 4
utts_per_speaker = 4
min_frames = 30
max_frames = 40
frame_widths = [8, 8, 8, 8, 16]
segment_widths = [8, 8]
epochs = 1
warmup_batches = 2
batch_size = 8
min_segment = 20
max_segment = 25
segments_per_utt = 1
batches_per_epoch = 3
lda_dim = 3
plda_iters = 2
n_target_trials = 6
n_nontarget_trials = 10
"""


@pytest.fixture()
def tiny_config(tmp_path: Path) -> Path:
    path = tmp_path / "tiny.toml"
    path.write_text(TINY_TOML, encoding="utf-8")
    return path


def test_invalid_flag_value_exits_with_config_code(tmp_path: Path) -> None:
    assert main(["gen-data", "--out", str(tmp_path / "a.spkf"), "--feat-dim", "0"]) == 2
    assert main(["run-experiment", "--work-dir", str(tmp_path), "--loss", "a_softmax", "--m", "1.5"]) == 2


def test_unknown_flag_is_a_usage_error(tmp_path: Path) -> None:
    with pytest.raises(SystemExit) as info:
        main(["gen-data", "--out", str(tmp_path / "a.spkf"), "--no-such-flag"])
    assert info.value.code == 2


def test_bad_inputs_exit_with_data_code(tmp_path: Path) -> None:
    garbage = tmp_path / "garbage.spkf"
    garbage.write_bytes(b"not an archive at all")

    assert main(["make-trials", "--archive", str(garbage), "--out", str(tmp_path / "t.txt")]) == 3
    assert main(["make-trials", "--archive", str(tmp_path / "missing.spkf"), "--out", str(tmp_path / "t.txt")]) == 3


def test_gen_data_is_deterministic(tmp_path: Path, tiny_config: Path) -> None:
    first, second, other = tmp_path / "1.spkf", tmp_path / "2.spkf", tmp_path / "3.spkf"

    assert main(["gen-data", "--config", str(tiny_config), "--out", str(first)]) == 0
    assert main(["gen-data", "--config", str(tiny_config), "--out", str(second)]) == 0
    assert main(["gen-data", "--config", str(tiny_config), "--seed", "5", "--out", str(other)]) == 0

    assert first.read_bytes() == second.read_bytes()
    assert first.read_bytes() != other.read_bytes()
    archive = read_archive(first)
    assert archive.dim == 10
    assert archive.num_speakers == 6
    assert len(archive) == 24


def test_evaluate_writes_report_and_det(tmp_path: Path) -> None:
    trials = tmp_path / "trials.txt"
    trials.write_text("a b target\na c nontarget\nd e target\nd f nontarget\n", encoding="utf-8")
    scores = tmp_path / "scores.txt"
    scores.write_text("a b 0.9\na c 0.6\nd e 0.4\nd f 0.1\n", encoding="utf-8")
    report_path, det_path = tmp_path / "report.json", tmp_path / "det.csv"

    code = main(
        ["evaluate", "--scores", str(scores), "--trials", str(trials), "--out", str(report_path), "--det-csv", str(det_path)]
    )

    assert code == 0
    report = orjson.loads(report_path.read_bytes())
    assert report["eer"] == 0.5
    assert report["eer_threshold"] == 0.6
    assert report["n_target"] == report["n_nontarget"] == 2
    det = pd.read_csv(det_path)
    assert list(det.columns) == ["threshold", "p_fa", "p_miss"]
    assert len(det) == 5


def test_evaluate_reports_unscored_trials(tmp_path: Path) -> None:
    trials = tmp_path / "trials.txt"
    trials.write_text("a b target\na c nontarget\n", encoding="utf-8")
    scores = tmp_path / "scores.txt"
    scores.write_text("a b 0.9\n", encoding="utf-8")

    assert main(["evaluate", "--scores", str(scores), "--trials", str(trials), "--out", str(tmp_path / "r.json")]) == 3


ARTIFACTS = (
    "config.json",
    "train.spkf",
    "eval.spkf",
    "eval_trials.txt",
    "train_log.jsonl",
    "epoch_1.spkn",
    "model.spkn",
    "train_emb.spkf",
    "eval_emb.spkf",
    "backend.bin",
    "scores.txt",
    "report.json",
    "det.csv",
)


def test_run_experiment_is_reproducible(tmp_path: Path, tiny_config: Path) -> None:
    runs = [tmp_path / "run_a", tmp_path / "run_b"]
    for work_dir in runs:
        assert main(["run-experiment", "--config", str(tiny_config), "--work-dir", str(work_dir)]) == 0

    for name in ARTIFACTS:
        assert (runs[0] / name).read_bytes() == (runs[1] / name).read_bytes(), name

    report = orjson.loads((runs[0] / "report.json").read_bytes())
    assert 0.0 <= report["eer"] <= 1.0
    assert report["n_target"] == 6
    assert report["n_nontarget"] == 10
    log_lines = (runs[0] / "train_log.jsonl").read_bytes().splitlines()
    assert len(log_lines) == 3


def test_extract_skips_short_utterances(tmp_path: Path) -> None:
    net_cfg = NetworkConfig(feat_dim=4, frame_widths=(6, 6, 6, 6, 8), segment_widths=(5, 5))
    model = SpeakerModel.create(net_cfg, LossConfig(), 2, Rng(0))
    checkpoint = save_checkpoint(tmp_path / "model.spkn", model)
    rng = np.random.default_rng(0)
    archive = FeatureArchive(
        dim=4,
        utterances=[
            Utterance("long", "spk1", rng.normal(size=(30, 4))),
            Utterance("short", "spk2", rng.normal(size=(10, 4))),
        ],
    )
    archive_path = write_archive(tmp_path / "feats.spkf", archive)
    out = tmp_path / "emb.spkf"

    result = cmd_extract(checkpoint, archive_path, out)

    assert result.embeddings.ids == ["long"]
    assert result.embeddings.dim == 5
    sidecar = orjson.loads(skipped_report_path(out).read_bytes())
    assert sidecar == {"skipped": [{"utt_id": "short", "frames": 10, "minimum": 15}]}
    assert len(read_archive(out)) == 1


def test_describe_net_prints_the_parameter_count(capsys: pytest.CaptureFixture[str]) -> None:
    assert main(["describe-net", "--full-scale", "--classes", "1000"]) == 0

    out = capsys.readouterr().out
    assert "5,004,668" in out
    assert "1536x512" in out


def test_evaluate_with_undecodable_trials_exits_with_data_code(tmp_path: Path) -> None:
    trials = tmp_path / "trials.txt"
    trials.write_bytes(b"\xff\xfe c nontarget\n")
    scores = tmp_path / "scores.txt"
    scores.write_text("a b 0.9\n", encoding="utf-8")

    assert main(["evaluate", "--scores", str(scores), "--trials", str(trials), "--out", str(tmp_path / "r.json")]) == 3
    assert not (tmp_path / "r.json").exists()


def test_undecodable_config_file_exits_with_config_code(tmp_path: Path) -> None:
    config = tmp_path / "bad.toml"
    config.write_bytes(b"seed = 1\n# \xff\n")

    assert main(["gen-data", "--config", str(config), "--out", str(tmp_path / "a.spkf")]) == 2


def test_softmax_with_a_margin_exits_with_config_code(tmp_path: Path) -> None:
    assert main(["run-experiment", "--work-dir", str(tmp_path), "--loss", "softmax", "--m", "0.35"]) == 2
    assert not (tmp_path / "config.json").exists()


def test_extract_is_bit_identical_across_runs(tmp_path: Path) -> None:
    net_cfg = NetworkConfig(feat_dim=4, frame_widths=(6, 6, 6, 6, 8), segment_widths=(5, 5))
    checkpoint = save_checkpoint(tmp_path / "model.spkn", SpeakerModel.create(net_cfg, LossConfig(), 3, Rng(2)))
    rng = np.random.default_rng(1)
    archive = FeatureArchive(
        dim=4,
        utterances=[Utterance(f"u{i}", f"spk{i % 3}", rng.normal(size=(20 + 7 * i, 4))) for i in range(6)],
    )
    archive_path = write_archive(tmp_path / "feats.spkf", archive)
    first, second = tmp_path / "emb_a.spkf", tmp_path / "emb_b.spkf"

    cmd_extract(checkpoint, archive_path, first)
    assert main(["extract", "--checkpoint", str(checkpoint), "--archive", str(archive_path), "--out", str(second)]) == 0

    assert first.read_bytes() == second.read_bytes()
    assert len(read_archive(first)) == 6
