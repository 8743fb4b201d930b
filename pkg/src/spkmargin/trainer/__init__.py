"""Segment sampling, SGD and the training loop."""

from .loop import EpochSummary, TrainResult, train, train_step
from .optimizer import OptimizerState, clip_by_global_norm, global_norm, lr_at, sgd_step
from .sampling import SegmentBatch, batches_per_epoch, epoch_schedule, random_crop, sample_segments, tile_to_length

__all__ = [
    "EpochSummary",
    "OptimizerState",
    "SegmentBatch",
    "TrainResult",
    "batches_per_epoch",
    "clip_by_global_norm",
    "epoch_schedule",
    "global_norm",
    "lr_at",
    "random_crop",
    "sample_segments",
    "sgd_step",
    "tile_to_length",
    "train",
    "train_step",
]
