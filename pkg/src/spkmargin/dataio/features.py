"""Frame-level feature post-processing."""

from __future__ import annotations

import numpy as np

from ..core.errors import DomainError
from ..numeric import Matrix, as_matrix
from .archive import FeatureArchive, Utterance

# 3 s at a 10 ms frame shift.
DEFAULT_CMN_WINDOW = 300


def apply_sliding_cmn(frames: Matrix, window: int = DEFAULT_CMN_WINDOW) -> Matrix:
    """Subtract the mean of a centred window of up to *window* frames.

    Near the edges the window is shifted to stay inside the utterance, and
    utterances shorter than the window use their global mean.
    """

    if window < 1:
        raise DomainError(f"CMN window must be positive, got {window}")
    x = as_matrix(frames, name="frames")
    num_frames = x.shape[0]
    if num_frames <= window:
        return x - x.mean(axis=0, keepdims=True)
    starts = np.clip(np.arange(num_frames) - window // 2, 0, num_frames - window)
    cumulative = np.vstack([np.zeros((1, x.shape[1])), np.cumsum(x, axis=0)])
    sums = cumulative[starts + window] - cumulative[starts]
    return x - sums / window


def apply_cmn_to_archive(archive: FeatureArchive, window: int = DEFAULT_CMN_WINDOW) -> FeatureArchive:
    return FeatureArchive(
        dim=archive.dim,
        utterances=[
            Utterance(utt.utt_id, utt.speaker_id, apply_sliding_cmn(utt.frames, window))
            for utt in archive.utterances
        ],
    )


__all__ = ["DEFAULT_CMN_WINDOW", "apply_cmn_to_archive", "apply_sliding_cmn"]
