"""``train``: fit the x-vector network on a feature archive."""

from __future__ import annotations

from pathlib import Path

from ..checkpoint import SpeakerModel, save_checkpoint
from ..dataio import FeatureArchive, read_archive
from ..domain.experiment import ExperimentConfig
from ..trainer import TrainResult, train
from .common import log_written

TRAIN_LOG_NAME = "train_log.jsonl"


def train_model(
    cfg: ExperimentConfig,
    archive: FeatureArchive,
    out: Path,
    *,
    log_path: Path | None = None,
    epoch_dir: Path | None = None,
) -> tuple[SpeakerModel, TrainResult]:
    model = SpeakerModel.create(cfg.network_config(), cfg.loss_config(), archive.num_speakers, cfg.model_rng())
    result = train(
        archive,
        model,
        cfg.train_config(),
        log_path=log_path or out.parent / TRAIN_LOG_NAME,
        checkpoint_dir=epoch_dir or out.parent,
    )
    save_checkpoint(out, model)
    log_written("checkpoint", out, loss_kind=cfg.loss.value, epochs=len(result.epochs))
    return model, result


def cmd_train(
    cfg: ExperimentConfig,
    archive_path: Path,
    out: Path,
    *,
    log_path: Path | None = None,
    epoch_dir: Path | None = None,
) -> TrainResult:
    archive = read_archive(archive_path, expected_dim=cfg.feat_dim)
    _, result = train_model(cfg, archive, out, log_path=log_path, epoch_dir=epoch_dir)
    return result


__all__ = ["TRAIN_LOG_NAME", "cmd_train", "train_model"]
