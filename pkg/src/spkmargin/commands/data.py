"""``gen-data`` and ``make-trials``."""

from __future__ import annotations

from pathlib import Path

from ..core.logging import get_logger
from ..dataio import (
    FeatureArchive,
    TrialList,
    apply_cmn_to_archive,
    encode_archive,
    format_trials,
    generate_synthetic,
    generate_trials,
    read_archive,
)
from ..domain.experiment import ExperimentConfig
from .common import log_written

_logger = get_logger("commands.data")


def build_archive(cfg: ExperimentConfig, split: str) -> FeatureArchive:
    archive = generate_synthetic(cfg.synth_config(split))
    if cfg.cmn_window is not None:
        archive = apply_cmn_to_archive(archive, cfg.cmn_window)
    return archive


def cmd_gen_data(cfg: ExperimentConfig, out: Path, *, split: str = "train") -> FeatureArchive:
    archive = build_archive(cfg, split)
    payload = encode_archive(archive)
    out.parent.mkdir(parents=True, exist_ok=True)
    out.write_bytes(payload)
    log_written("archive", out, split=split, utterances=len(archive), speakers=archive.num_speakers)
    return archive


def build_trials(cfg: ExperimentConfig, archive: FeatureArchive) -> TrialList:
    return generate_trials(archive, cfg.n_target_trials, cfg.n_nontarget_trials, cfg.trials_rng())


def cmd_make_trials(cfg: ExperimentConfig, archive_path: Path, out: Path) -> TrialList:
    trials = build_trials(cfg, read_archive(archive_path))
    text = format_trials(trials)
    out.parent.mkdir(parents=True, exist_ok=True)
    out.write_text(text, encoding="utf-8")
    log_written("trials", out, target=trials.n_target, nontarget=trials.n_nontarget)
    return trials


__all__ = ["build_archive", "build_trials", "cmd_gen_data", "cmd_make_trials"]
