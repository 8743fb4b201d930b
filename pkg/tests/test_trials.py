from collections.abc import Callable
from pathlib import Path

import pytest

from spkmargin.core.errors import DataFormatError, DomainError
from spkmargin.dataio import (
    TrialLabel,
    generate_synthetic,
    generate_trials,
    parse_scores,
    parse_trials,
    parse_trials_text,
    write_scores,
    write_trials,
)
from spkmargin.domain import SynthConfig
from spkmargin.numeric import Rng


def test_single_target_line() -> None:
    trials = parse_trials_text("a b target\n")
    assert len(trials) == 1
    assert trials.trials[0].key == ("a", "b")
    assert trials.trials[0].label is TrialLabel.TARGET


def test_empty_file_gives_empty_list(tmp_path: Path) -> None:
    path = tmp_path / "trials.txt"
    path.write_text("", encoding="utf-8")
    assert len(parse_trials(path)) == 0


def test_unknown_label_cites_line(tmp_path: Path) -> None:
    path = tmp_path / "trials.txt"
    path.write_text("a b target\nc d nontarget\na b maybe\n", encoding="utf-8")
    with pytest.raises(DataFormatError, match=r"trials\.txt:3: unknown label 'maybe'"):
        parse_trials(path)


def test_malformed_line_cites_line() -> None:
    with pytest.raises(DataFormatError, match=":2: expected 3 fields"):
        parse_trials_text("a b target\na b\n")


def test_parse_preserves_order_and_round_trips(tmp_path: Path) -> None:
    text = "x y nontarget\na b target\n  c   d   target  \n"
    trials = parse_trials_text(text)
    assert [t.key for t in trials] == [("x", "y"), ("a", "b"), ("c", "d")]
    assert trials.n_target == 2
    assert trials.n_nontarget == 1
    assert parse_trials(write_trials(tmp_path / "t.txt", trials)).trials == trials.trials


def test_generate_trials_labels_and_determinism() -> None:
    archive = generate_synthetic(SynthConfig(n_speakers=6, utts_per_speaker=4, min_frames=5, max_frames=8, dim=3))
    speakers = {utt.utt_id: utt.speaker_id for utt in archive}
    trials = generate_trials(archive, 20, 50, Rng(9))
    assert trials.n_target == 20
    assert trials.n_nontarget == 50
    assert len({t.key for t in trials}) == 70
    for trial in trials:
        assert trial.enroll_id != trial.test_id
        assert (speakers[trial.enroll_id] == speakers[trial.test_id]) is trial.is_target
    assert generate_trials(archive, 20, 50, Rng(9)).trials == trials.trials


def test_generate_trials_rejects_impossible_counts() -> None:
    archive = generate_synthetic(SynthConfig(n_speakers=2, utts_per_speaker=2, min_frames=5, max_frames=5, dim=2))
    with pytest.raises(DomainError, match="distinct target pairs"):
        generate_trials(archive, 5, 1, Rng(0))


def test_scores_round_trip_exactly(tmp_path: Path) -> None:
    trials = parse_trials_text("a b target\nc d nontarget\n")
    path = write_scores(tmp_path / "scores.txt", trials, [0.1 + 0.2, -1e-300])
    assert parse_scores(path) == {("a", "b"): 0.1 + 0.2, ("c", "d"): -1e-300}


def test_bad_score_value_cites_line(tmp_path: Path) -> None:
    path = tmp_path / "scores.txt"
    path.write_text("a b 1.0\nc d high\n", encoding="utf-8")
    with pytest.raises(DataFormatError, match=":2: score 'high'"):
        parse_scores(path)


@pytest.mark.parametrize("reader", [parse_trials, parse_scores])
def test_invalid_utf8_is_a_format_error(tmp_path: Path, reader: Callable[[Path], object]) -> None:
    path = tmp_path / "input.txt"
    path.write_bytes(b"a b target\n\xff\xfe c nontarget\n")
    with pytest.raises(DataFormatError, match="invalid UTF-8 at byte 11"):
        reader(path)
