"""The flat experiment schema shared by the TOML config file and the CLI flags."""

from __future__ import annotations

import tomllib
import types
import typing
from pathlib import Path
from typing import Any

from pydantic import Field, ValidationError, model_validator

from ..core.errors import ConfigError
from ..numeric import Rng
from .configs import (
    DESK_FRAME_WIDTHS,
    DESK_SEGMENT_WIDTHS,
    BackendConfig,
    FrozenConfig,
    LossConfig,
    LossKind,
    NetworkConfig,
    SynthConfig,
    TrainConfig,
    config_error_from,
    normalize_loss_kind,
)

TRAIN_PREFIX = "spk"
EVAL_PREFIX = "eval"

_EVAL_DATA_STREAM = 1
_MODEL_STREAM = 3
_TRIALS_STREAM = 4


class ExperimentConfig(FrozenConfig):
    """Every knob of a desk-scale run.

    Defaults describe the frozen synthetic experiment: 64 training and 32
    disjoint evaluation speakers, desk widths, three epochs.
    """

    seed: int = Field(0, ge=0, lt=2**63)

    # data
    feat_dim: int = Field(30, ge=2)
    n_train_speakers: int = Field(64, ge=2)
    n_eval_speakers: int = Field(32, ge=2)
    utts_per_speaker: int = Field(20, ge=2)
    min_frames: int = Field(100, ge=1)
    max_frames: int = Field(300, ge=1)
    between_speaker_scale: float = Field(1.0, gt=0)
    within_speaker_scale: float = Field(3.0, gt=0)
    channel_scale: float = Field(1.0, gt=0)
    cmn_window: int | None = Field(None, ge=1)
    n_target_trials: int = Field(2000, ge=1)
    n_nontarget_trials: int = Field(8000, ge=1)

    # network
    frame_widths: tuple[int, ...] = DESK_FRAME_WIDTHS
    segment_widths: tuple[int, ...] = DESK_SEGMENT_WIDTHS

    # loss
    loss: LossKind = LossKind.SOFTMAX
    m: float | None = None
    s: float = Field(32.0, gt=0)

    # training
    epochs: int = Field(3, ge=0)
    lr_peak: float = Field(1e-2, ge=0)
    momentum: float = Field(0.7, ge=0, lt=1)
    weight_decay: float = Field(1e-5, ge=0)
    max_grad_norm: float = Field(1e3, gt=0)
    warmup_batches: int = Field(500, ge=0)
    batch_size: int = Field(32, ge=1)
    min_segment: int = Field(50, ge=1)
    max_segment: int = Field(100, ge=1)
    segments_per_utt: int = Field(12, ge=1)
    batches_per_epoch: int | None = Field(None, ge=1)

    # back-end
    lda_dim: int = Field(128, ge=1)
    plda_iters: int = Field(10, ge=0)

    @model_validator(mode="before")
    @classmethod
    def _normalize_loss(cls, data: Any) -> Any:
        if isinstance(data, dict) and isinstance(data.get("loss"), str):
            data = {**data, "loss": normalize_loss_kind(data["loss"])}
        return data

    @model_validator(mode="after")
    def _check_consistency(self) -> ExperimentConfig:
        # Each sub-config validates its own slice; nested errors surface here.
        self.synth_config("train")
        net = self.network_config()
        self.loss_config()
        self.train_config()
        if self.max_segment < net.receptive_field:
            raise ValueError(
                f"max_segment ({self.max_segment}) is below the receptive field ({net.receptive_field})"
            )
        return self

    def synth_config(self, split: str) -> SynthConfig:
        if split == "train":
            speakers, seed, prefix = self.n_train_speakers, self.seed, TRAIN_PREFIX
        elif split == "eval":
            speakers, seed, prefix = self.n_eval_speakers, Rng(self.seed).child(_EVAL_DATA_STREAM).seed, EVAL_PREFIX
        else:
            raise ConfigError(f"unknown split {split!r}, expected 'train' or 'eval'")
        return SynthConfig(
            n_speakers=speakers,
            utts_per_speaker=self.utts_per_speaker,
            min_frames=self.min_frames,
            max_frames=self.max_frames,
            dim=self.feat_dim,
            between_speaker_scale=self.between_speaker_scale,
            within_speaker_scale=self.within_speaker_scale,
            channel_scale=self.channel_scale,
            seed=seed,
            id_prefix=prefix,
        )

    def network_config(self) -> NetworkConfig:
        return NetworkConfig(
            feat_dim=self.feat_dim,
            frame_widths=self.frame_widths,
            segment_widths=self.segment_widths,
        )

    def loss_config(self) -> LossConfig:
        return LossConfig(kind=self.loss, m=self.m, s=self.s)

    def train_config(self) -> TrainConfig:
        return TrainConfig(
            epochs=self.epochs,
            lr_peak=self.lr_peak,
            momentum=self.momentum,
            weight_decay=self.weight_decay,
            max_grad_norm=self.max_grad_norm,
            warmup_batches=self.warmup_batches,
            batch_size=self.batch_size,
            min_segment=self.min_segment,
            max_segment=self.max_segment,
            segments_per_utt=self.segments_per_utt,
            batches_per_epoch=self.batches_per_epoch,
            seed=self.seed,
        )

    def backend_config(self) -> BackendConfig:
        return BackendConfig(lda_dim=self.lda_dim, plda_iters=self.plda_iters)

    def model_rng(self) -> Rng:
        return Rng(self.seed).child(_MODEL_STREAM)

    def trials_rng(self) -> Rng:
        return Rng(self.seed).child(_TRIALS_STREAM)


def _is_tuple_field(annotation: Any) -> bool:
    return typing.get_origin(annotation) is tuple


def _is_optional(annotation: Any) -> bool:
    origin = typing.get_origin(annotation)
    return origin in (typing.Union, types.UnionType) and type(None) in typing.get_args(annotation)


def coerce_flag_value(name: str, raw: str) -> Any:
    """Turn a command-line string into something pydantic can validate for *name*."""

    field = ExperimentConfig.model_fields[name]
    text = raw.strip()
    if _is_optional(field.annotation) and text.lower() in {"none", "null", ""}:
        return None
    if _is_tuple_field(field.annotation):
        return tuple(part.strip() for part in text.split(",") if part.strip())
    return text


def read_config_file(path: Path) -> dict[str, Any]:
    try:
        with path.open("rb") as handle:
            data = tomllib.load(handle)
    except FileNotFoundError as exc:
        raise ConfigError(f"config file {path} does not exist") from exc
    except tomllib.TOMLDecodeError as exc:
        raise ConfigError(f"{path}: {exc}") from exc
    except UnicodeDecodeError as exc:
        raise ConfigError(f"{path}: invalid UTF-8 at byte {exc.start}") from exc
    return data


def load_experiment_config(path: Path | None = None, overrides: dict[str, Any] | None = None) -> ExperimentConfig:
    """File values first, then *overrides*; any problem becomes :class:`ConfigError`."""

    values: dict[str, Any] = read_config_file(path) if path is not None else {}
    values.update(overrides or {})
    try:
        return ExperimentConfig(**values)
    except ValidationError as exc:
        raise config_error_from(exc) from exc


__all__ = [
    "EVAL_PREFIX",
    "ExperimentConfig",
    "TRAIN_PREFIX",
    "coerce_flag_value",
    "load_experiment_config",
    "read_config_file",
]
