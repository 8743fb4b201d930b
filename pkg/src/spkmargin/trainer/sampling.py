"""Random fixed-length crops of training utterances."""

from __future__ import annotations

import math
from collections.abc import Sequence
from dataclasses import dataclass

import numpy as np
from numpy.typing import NDArray

from ..core.errors import DomainError
from ..dataio.archive import FeatureArchive
from ..domain.configs import TrainConfig
from ..numeric import Matrix, Rng


@dataclass(slots=True)
class SegmentBatch:
    frames: NDArray[np.float64]
    labels: NDArray[np.int64]

    @property
    def segment_frames(self) -> int:
        return int(self.frames.shape[1])

    def __len__(self) -> int:
        return int(self.frames.shape[0])


def tile_to_length(frames: Matrix, length: int) -> Matrix:
    """Repeat *frames* cyclically until there are at least *length* rows."""

    if frames.shape[0] >= length:
        return frames
    return np.tile(frames, (math.ceil(length / frames.shape[0]), 1))


def random_crop(frames: Matrix, length: int, rng: Rng) -> Matrix:
    padded = tile_to_length(frames, length)
    start = int(rng.integers(0, padded.shape[0] - length))
    return padded[start : start + length]


def sample_segments(
    archive: FeatureArchive,
    cfg: TrainConfig,
    rng: Rng,
    utt_indices: Sequence[int] | None = None,
) -> SegmentBatch:
    """One batch of equal-length crops.

    The crop length is drawn once per batch, uniformly from the configured
    range. Without explicit indices, ``batch_size`` utterances are drawn with
    replacement.
    """

    if len(archive) == 0:
        raise DomainError("cannot sample segments from an empty archive")
    if utt_indices is None:
        utt_indices = [int(i) for i in rng.integers(0, len(archive) - 1, size=cfg.batch_size)]
    if not utt_indices:
        raise DomainError("a batch needs at least one utterance")
    length = int(rng.integers(cfg.min_segment, cfg.max_segment))
    frames = np.empty((len(utt_indices), length, archive.dim))
    labels = np.empty(len(utt_indices), dtype=np.int64)
    for row, index in enumerate(utt_indices):
        utt = archive.utterances[index]
        frames[row] = random_crop(utt.frames, length, rng)
        labels[row] = archive.label_of(utt)
    return SegmentBatch(frames, labels)


def batches_per_epoch(n_utterances: int, cfg: TrainConfig) -> int:
    if cfg.batches_per_epoch is not None:
        return cfg.batches_per_epoch
    return max(1, math.ceil(n_utterances * cfg.segments_per_utt / cfg.batch_size))


def epoch_schedule(n_utterances: int, cfg: TrainConfig, rng: Rng) -> list[list[int]]:
    """Utterance indices for every batch of one epoch.

    Each utterance appears ``segments_per_utt`` times in shuffled order; the
    list is cycled when a fixed ``batches_per_epoch`` asks for more.
    """

    if n_utterances < 1:
        raise DomainError("cannot schedule an epoch over an empty archive")
    pool = np.repeat(np.arange(n_utterances), cfg.segments_per_utt)
    order = pool[rng.permutation(len(pool))]
    count = batches_per_epoch(n_utterances, cfg)
    needed = count * cfg.batch_size
    if needed > len(order):
        order = np.resize(order, needed)
    batches = [order[i * cfg.batch_size : (i + 1) * cfg.batch_size] for i in range(count)]
    return [[int(i) for i in batch] for batch in batches if len(batch)]


__all__ = [
    "SegmentBatch",
    "batches_per_epoch",
    "epoch_schedule",
    "random_crop",
    "sample_segments",
    "tile_to_length",
]
