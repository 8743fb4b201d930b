"""Validated configuration objects for every stage of the pipeline."""

from __future__ import annotations

import math
from enum import StrEnum
from typing import Any, TypeVar

from pydantic import BaseModel, ConfigDict, Field, ValidationError, model_validator

from ..core.errors import ConfigError

ModelT = TypeVar("ModelT", bound=BaseModel)


class FrozenConfig(BaseModel):
    model_config = ConfigDict(frozen=True, extra="forbid")


def build_config(model: type[ModelT], **fields: Any) -> ModelT:
    """Instantiate *model*, reporting validation failures as :class:`ConfigError`."""

    try:
        return model(**fields)
    except ValidationError as exc:
        raise config_error_from(exc) from exc


def config_error_from(exc: ValidationError) -> ConfigError:
    parts = []
    for error in exc.errors():
        location = ".".join(str(item) for item in error.get("loc", ())) or exc.title
        parts.append(f"{location}: {error.get('msg')}")
    return ConfigError("; ".join(parts))


class SynthConfig(FrozenConfig):
    """Gaussian speaker/channel/frame generator parameters."""

    n_speakers: int = Field(64, ge=1)
    utts_per_speaker: int = Field(20, ge=1)
    min_frames: int = Field(100, ge=1)
    max_frames: int = Field(300, ge=1)
    dim: int = Field(30, ge=2)
    between_speaker_scale: float = Field(3.0, gt=0)
    within_speaker_scale: float = Field(1.0, gt=0)
    channel_scale: float = Field(0.5, gt=0)
    seed: int = Field(0, ge=0, lt=2**64)
    id_prefix: str = Field("spk", min_length=1, max_length=64)

    @model_validator(mode="after")
    def _check_range(self) -> SynthConfig:
        if self.min_frames > self.max_frames:
            raise ValueError(f"min_frames ({self.min_frames}) > max_frames ({self.max_frames})")
        return self

    @property
    def frames_range(self) -> tuple[int, int]:
        return self.min_frames, self.max_frames


# Full-scale x-vector widths and the desk-scale defaults used by tests and experiments.
FULL_FRAME_WIDTHS = (512, 512, 512, 512, 1500)
FULL_SEGMENT_WIDTHS = (512, 512)
DESK_FRAME_WIDTHS = (64, 64, 64, 64, 128)
DESK_SEGMENT_WIDTHS = (64, 64)
XVECTOR_CONTEXTS: tuple[tuple[int, ...], ...] = (
    (-2, -1, 0, 1, 2),
    (-2, 0, 2),
    (-3, 0, 3),
    (0,),
    (0,),
)


class NetworkConfig(FrozenConfig):
    feat_dim: int = Field(30, ge=1)
    frame_widths: tuple[int, ...] = DESK_FRAME_WIDTHS
    frame_contexts: tuple[tuple[int, ...], ...] = XVECTOR_CONTEXTS
    segment_widths: tuple[int, ...] = DESK_SEGMENT_WIDTHS
    bn_momentum: float = Field(0.1, gt=0, le=1)
    bn_eps: float = Field(1e-5, gt=0)
    pool_eps: float = Field(1e-10, ge=0)

    @model_validator(mode="after")
    def _check_layout(self) -> NetworkConfig:
        if not self.frame_widths:
            raise ValueError("at least one frame-level layer is required")
        if len(self.frame_widths) != len(self.frame_contexts):
            raise ValueError(
                f"{len(self.frame_widths)} frame widths but {len(self.frame_contexts)} context lists"
            )
        if len(self.segment_widths) < 1:
            raise ValueError("at least one segment-level layer is required")
        if any(width < 1 for width in (*self.frame_widths, *self.segment_widths)):
            raise ValueError("layer widths must be positive")
        for offsets in self.frame_contexts:
            if not offsets or any(b <= a for a, b in zip(offsets, offsets[1:], strict=False)):
                raise ValueError(f"context offsets must be strictly increasing, got {offsets}")
        return self

    @classmethod
    def full_scale(cls, *, feat_dim: int = 30) -> NetworkConfig:
        return cls(
            feat_dim=feat_dim,
            frame_widths=FULL_FRAME_WIDTHS,
            segment_widths=FULL_SEGMENT_WIDTHS,
        )

    @property
    def embedding_dim(self) -> int:
        return self.segment_widths[0]

    @property
    def output_dim(self) -> int:
        return self.segment_widths[-1]

    @property
    def receptive_field(self) -> int:
        return 1 + sum(offsets[-1] - offsets[0] for offsets in self.frame_contexts)


class LossKind(StrEnum):
    SOFTMAX = "softmax"
    A_SOFTMAX = "a_softmax"
    AM_SOFTMAX = "am_softmax"
    AAM_SOFTMAX = "aam_softmax"


# Better-performing margins reported for each loss; s is fixed to 32.
DEFAULT_MARGINS = {
    LossKind.SOFTMAX: 0.0,
    LossKind.A_SOFTMAX: 2.0,
    LossKind.AM_SOFTMAX: 0.2,
    LossKind.AAM_SOFTMAX: 0.3,
}
DEFAULT_SCALE = 32.0

_LOSS_ALIASES = {"aam": "aam_softmax", "am": "am_softmax", "a": "a_softmax", "asoftmax": "a_softmax"}


def normalize_loss_kind(value: Any) -> Any:
    if isinstance(value, str):
        normalized = value.strip().lower().replace("-", "_")
        return _LOSS_ALIASES.get(normalized, normalized)
    return value


class LossConfig(FrozenConfig):
    kind: LossKind = LossKind.SOFTMAX
    m: float = Field(0.0, allow_inf_nan=False)
    s: float = Field(DEFAULT_SCALE, gt=0, allow_inf_nan=False)

    @model_validator(mode="before")
    @classmethod
    def _default_margin(cls, data: Any) -> Any:
        if isinstance(data, dict):
            data = {**data, "kind": normalize_loss_kind(data.get("kind", LossKind.SOFTMAX))}
            if data.get("m") is None and data["kind"] in DEFAULT_MARGINS:
                data["m"] = DEFAULT_MARGINS[LossKind(data["kind"])]
        return data

    @model_validator(mode="after")
    def _check_margin(self) -> LossConfig:
        m = self.m
        if self.kind is LossKind.SOFTMAX and m != 0:
            raise ValueError(f"softmax takes no margin, got m={m}")
        if self.kind is LossKind.A_SOFTMAX and (m < 1 or not m.is_integer()):
            raise ValueError(f"a_softmax needs an integer margin m >= 1, got {m}")
        if self.kind is LossKind.AM_SOFTMAX and m < 0:
            raise ValueError(f"am_softmax needs m >= 0, got {m}")
        if self.kind is LossKind.AAM_SOFTMAX and not 0 <= m < math.pi:
            raise ValueError(f"aam_softmax needs m in [0, pi), got {m}")
        return self

    @property
    def has_bias(self) -> bool:
        return self.kind is LossKind.SOFTMAX


class TrainConfig(FrozenConfig):
    """Optimizer and sampling settings; defaults are the full-scale recipe."""

    epochs: int = Field(3, ge=0)
    lr_peak: float = Field(1e-4, ge=0)
    momentum: float = Field(0.7, ge=0, lt=1)
    weight_decay: float = Field(1e-5, ge=0)
    max_grad_norm: float = Field(1e3, gt=0)
    warmup_batches: int = Field(500, ge=0)
    batch_size: int = Field(32, ge=1)
    min_segment: int = Field(50, ge=1)
    max_segment: int = Field(100, ge=1)
    segments_per_utt: int = Field(1, ge=1)
    batches_per_epoch: int | None = Field(None, ge=1)
    seed: int = Field(0, ge=0, lt=2**64)

    @model_validator(mode="after")
    def _check_range(self) -> TrainConfig:
        if self.min_segment > self.max_segment:
            raise ValueError(f"min_segment ({self.min_segment}) > max_segment ({self.max_segment})")
        return self

    @property
    def segment_frames_range(self) -> tuple[int, int]:
        return self.min_segment, self.max_segment


class BackendConfig(FrozenConfig):
    lda_dim: int = Field(128, ge=1)
    plda_iters: int = Field(10, ge=0)


class DcfParams(FrozenConfig):
    """Detection cost operating point; costs default to 1."""

    p_target: float = Field(0.01, gt=0, lt=1)
    c_miss: float = Field(1.0, gt=0)
    c_fa: float = Field(1.0, gt=0)


__all__ = [
    "BackendConfig",
    "DEFAULT_MARGINS",
    "DEFAULT_SCALE",
    "DESK_FRAME_WIDTHS",
    "DESK_SEGMENT_WIDTHS",
    "DcfParams",
    "FULL_FRAME_WIDTHS",
    "FULL_SEGMENT_WIDTHS",
    "FrozenConfig",
    "LossConfig",
    "LossKind",
    "NetworkConfig",
    "SynthConfig",
    "TrainConfig",
    "XVECTOR_CONTEXTS",
    "build_config",
    "config_error_from",
    "normalize_loss_kind",
]
