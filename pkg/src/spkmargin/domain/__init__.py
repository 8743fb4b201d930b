"""Validated configuration objects."""

from .configs import (
    DEFAULT_MARGINS,
    DEFAULT_SCALE,
    DESK_FRAME_WIDTHS,
    DESK_SEGMENT_WIDTHS,
    FULL_FRAME_WIDTHS,
    FULL_SEGMENT_WIDTHS,
    XVECTOR_CONTEXTS,
    BackendConfig,
    DcfParams,
    LossConfig,
    LossKind,
    NetworkConfig,
    SynthConfig,
    TrainConfig,
    build_config,
)
from .experiment import ExperimentConfig, coerce_flag_value, load_experiment_config

__all__ = [
    "BackendConfig",
    "DEFAULT_MARGINS",
    "DEFAULT_SCALE",
    "DESK_FRAME_WIDTHS",
    "DESK_SEGMENT_WIDTHS",
    "DcfParams",
    "ExperimentConfig",
    "FULL_FRAME_WIDTHS",
    "FULL_SEGMENT_WIDTHS",
    "LossConfig",
    "LossKind",
    "NetworkConfig",
    "SynthConfig",
    "TrainConfig",
    "XVECTOR_CONTEXTS",
    "build_config",
    "coerce_flag_value",
    "load_experiment_config",
]
