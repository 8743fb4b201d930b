"""The training loop: sample, forward, loss, backward, SGD step, log."""

from __future__ import annotations

from contextlib import ExitStack
from dataclasses import dataclass, field
from pathlib import Path
from time import perf_counter
from typing import IO, Any

import numpy as np
import orjson

from ..checkpoint import SpeakerModel, save_checkpoint
from ..core.errors import ConfigError, DimensionError, NumericError
from ..core.logging import get_logger
from ..dataio.archive import FeatureArchive
from ..domain.configs import TrainConfig
from ..losses import loss_dispatch
from ..network.layers import Mode
from ..numeric import Rng
from .optimizer import OptimizerState, lr_at, sgd_step
from .sampling import epoch_schedule, sample_segments

_logger = get_logger("trainer")


@dataclass(slots=True)
class EpochSummary:
    epoch: int
    mean_loss: float
    mean_target_theta: float
    batches: int
    last_lr: float


@dataclass(slots=True)
class TrainResult:
    epochs: list[EpochSummary] = field(default_factory=list)
    steps: int = 0
    checkpoints: list[Path] = field(default_factory=list)

    @property
    def epoch_losses(self) -> list[float]:
        return [summary.mean_loss for summary in self.epochs]


def _check_compatible(archive: FeatureArchive, model: SpeakerModel, cfg: TrainConfig) -> None:
    if len(archive) == 0:
        raise ConfigError("training archive is empty")
    if archive.dim != model.net.cfg.feat_dim:
        raise DimensionError(f"archive dim {archive.dim} != network feat_dim {model.net.cfg.feat_dim}")
    if archive.num_speakers != model.n_classes:
        raise ConfigError(
            f"archive has {archive.num_speakers} speakers but the projection has {model.n_classes} classes"
        )
    if cfg.max_segment < model.net.min_frames:
        raise ConfigError(
            f"max_segment {cfg.max_segment} is below the receptive field of {model.net.min_frames} frames"
        )


def _write_record(handle: IO[bytes] | None, record: dict[str, Any]) -> None:
    if handle is not None:
        handle.write(orjson.dumps(record, option=orjson.OPT_APPEND_NEWLINE))


def train_step(
    model: SpeakerModel,
    frames: np.ndarray,
    labels: np.ndarray,
    state: OptimizerState,
    cfg: TrainConfig,
) -> dict[str, Any]:
    """One optimizer step on a prepared batch; returns the log record."""

    out, cache = model.net.forward(frames, Mode.TRAIN)
    result = loss_dispatch(model.loss, out, labels, model.projection)
    model.projection.apply_gradients(result)
    model.net.backward(cache, result.dx)
    step = state.step
    lr = lr_at(step, cfg)
    grad_norm = sgd_step(model.parameters(), state, cfg, lr)
    return {
        "step": step,
        "loss": result.loss,
        "lr": lr,
        "grad_norm": grad_norm,
        "mean_target_theta": result.mean_target_theta,
        "mean_target_cos": result.mean_target_cos,
    }


def train(
    archive: FeatureArchive,
    model: SpeakerModel,
    cfg: TrainConfig,
    *,
    log_path: Path | None = None,
    checkpoint_dir: Path | None = None,
) -> TrainResult:
    """Train *model* in place for ``cfg.epochs`` epochs.

    Every batch appends one JSON line to *log_path*; every epoch writes
    ``epoch_<k>.spkn`` into *checkpoint_dir*. Runs with equal seeds and
    inputs produce identical parameters and logs.
    """

    _check_compatible(archive, model, cfg)

    rng = Rng(cfg.seed).child(7)
    state = OptimizerState()
    result = TrainResult()
    _logger.info(
        "train.start",
        stage="train",
        loss_kind=model.loss.kind.value,
        utterances=len(archive),
        speakers=archive.num_speakers,
        epochs=cfg.epochs,
    )
    with ExitStack() as stack:
        handle: IO[bytes] | None = None
        if log_path is not None:
            log_path.parent.mkdir(parents=True, exist_ok=True)
            handle = stack.enter_context(log_path.open("wb"))
        for epoch in range(1, cfg.epochs + 1):
            started = perf_counter()
            losses: list[float] = []
            thetas: list[float] = []
            lr = 0.0
            for indices in epoch_schedule(len(archive), cfg, rng):
                batch = sample_segments(archive, cfg, rng, indices)
                try:
                    record = train_step(model, batch.frames, batch.labels, state, cfg)
                except NumericError as exc:
                    _logger.error("train.aborted", stage="train", epoch=epoch, step=state.step, error=str(exc))
                    raise NumericError(f"batch {state.step}: {exc}") from exc
                record["epoch"] = epoch
                _write_record(handle, record)
                losses.append(record["loss"])
                thetas.append(record["mean_target_theta"])
                lr = record["lr"]
            summary = EpochSummary(epoch, float(np.mean(losses)), float(np.mean(thetas)), len(losses), lr)
            result.epochs.append(summary)
            if checkpoint_dir is not None:
                result.checkpoints.append(save_checkpoint(checkpoint_dir / f"epoch_{epoch}.spkn", model))
            _logger.info(
                "train.epoch",
                stage="train",
                epoch=epoch,
                step=state.step,
                loss=round(summary.mean_loss, 4),
                theta=round(summary.mean_target_theta, 4),
                lr=lr,
                duration_ms=round((perf_counter() - started) * 1000, 2),
            )
    result.steps = state.step
    return result


__all__ = ["EpochSummary", "TrainResult", "train", "train_step"]
