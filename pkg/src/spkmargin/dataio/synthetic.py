"""Gaussian speaker/channel generator standing in for MFCC extraction."""

from __future__ import annotations

import numpy as np

from ..core.logging import get_logger
from ..domain.configs import SynthConfig
from ..numeric import Rng
from .archive import FeatureArchive, Utterance

_logger = get_logger("dataio.synthetic")


def generate_synthetic(cfg: SynthConfig) -> FeatureArchive:
    """Draw ``frame = speaker_mean + channel_offset + noise`` for every utterance.

    Speaker means, per-utterance channel offsets and per-frame noise are
    zero-mean isotropic Gaussians with the configured spreads. The draw
    order is fixed, so one seed always yields the same archive.
    """

    rng = Rng(cfg.seed)
    means = rng.normal((cfg.n_speakers, cfg.dim), cfg.between_speaker_scale)
    width = max(4, len(str(cfg.n_speakers - 1)))
    utterances: list[Utterance] = []
    for speaker in range(cfg.n_speakers):
        speaker_id = f"{cfg.id_prefix}{speaker:0{width}d}"
        for index in range(cfg.utts_per_speaker):
            num_frames = int(rng.integers(cfg.min_frames, cfg.max_frames))
            channel = rng.normal(cfg.dim, cfg.channel_scale)
            noise = rng.normal((num_frames, cfg.dim), cfg.within_speaker_scale)
            frames = means[speaker] + channel + noise
            utterances.append(Utterance(f"{speaker_id}-utt{index:03d}", speaker_id, frames))
    archive = FeatureArchive(dim=cfg.dim, utterances=utterances)
    _logger.info(
        "synthetic.generated",
        speakers=cfg.n_speakers,
        utterances=len(archive),
        dim=cfg.dim,
        seed=cfg.seed,
    )
    return archive


def utterance_means(archive: FeatureArchive) -> np.ndarray:
    return np.stack([utt.frames.mean(axis=0) for utt in archive.utterances])


__all__ = ["generate_synthetic", "utterance_means"]
