"""``train-backend`` and ``score``."""

from __future__ import annotations

from pathlib import Path

import numpy as np
from numpy.typing import NDArray

from ..backend import BackendModel, encode_backend, fit_backend, load_backend, read_embeddings, score_trials
from ..dataio import parse_trials, write_scores
from ..domain.experiment import ExperimentConfig
from .common import log_written


def cmd_train_backend(cfg: ExperimentConfig, embeddings_path: Path, out: Path) -> BackendModel:
    model = fit_backend(read_embeddings(embeddings_path), cfg.backend_config())
    payload = encode_backend(model)
    out.parent.mkdir(parents=True, exist_ok=True)
    out.write_bytes(payload)
    log_written("backend", out, lda_dim=model.dim)
    return model


def cmd_score(backend_path: Path, embeddings_path: Path, trials_path: Path, out: Path) -> NDArray[np.float64]:
    model = load_backend(backend_path)
    trials = parse_trials(trials_path)
    scores = score_trials(model, read_embeddings(embeddings_path), trials)
    write_scores(out, trials, scores.tolist())
    log_written("scores", out, trials=len(trials))
    return scores


__all__ = ["cmd_score", "cmd_train_backend"]
