"""The full scoring back-end: center → LDA → re-center → length-norm → PLDA.

SPKB layout (little-endian)::

    b"SPKB" | u32 version=1 | u32 d | u32 p
    f8 blobs: center[d] | lda[d×p] | eigenvalues[p] | lda_mean[p] | mu[p] | B[p×p] | W[p×p]
"""

from __future__ import annotations

import struct
from dataclasses import dataclass
from pathlib import Path

import numpy as np
from numpy.typing import ArrayLike, NDArray

from ..core.errors import DataFormatError, DimensionError, UsageError
from ..core.logging import get_logger
from ..dataio.trials import TrialList
from ..domain.configs import BackendConfig
from ..numeric import Matrix, Vector, as_matrix
from .embeddings import EmbeddingSet
from .lda import LdaProjection, fit_lda, length_normalize, max_lda_dim
from .plda import PldaModel, fit_plda

MAGIC = b"SPKB"
FORMAT_VERSION = 1

_HEADER = struct.Struct("<4sIII")
_BLOB_DTYPE = np.dtype("<f8")

_logger = get_logger("backend")


@dataclass(frozen=True, slots=True)
class BackendModel:
    lda: LdaProjection
    lda_mean: Vector
    plda: PldaModel

    @property
    def input_dim(self) -> int:
        return int(self.lda.center.shape[0])

    @property
    def dim(self) -> int:
        return self.lda.dim

    def transform(self, vectors: ArrayLike) -> Matrix:
        """Center, project, re-center and length-normalize raw embeddings (rows)."""

        x = as_matrix(vectors, name="embeddings")
        if x.shape[1] != self.input_dim:
            raise DimensionError(f"embedding dim {x.shape[1]} != back-end input dim {self.input_dim}")
        return length_normalize(self.lda.apply(x) - self.lda_mean)


def fit_backend(embs: EmbeddingSet, cfg: BackendConfig) -> BackendModel:
    """Fit LDA and PLDA on labelled raw embeddings.

    ``cfg.lda_dim`` is capped at ``min(dim, speakers - 1)``.
    """

    if embs.processed:
        raise UsageError("back-end must be fitted on raw embeddings")
    labels = embs.label_indices()
    n_classes = int(np.unique(labels).size)
    p = min(cfg.lda_dim, max_lda_dim(embs.dim, n_classes))
    if p < cfg.lda_dim:
        _logger.info("backend.lda_capped", requested=cfg.lda_dim, used=p, classes=n_classes, dim=embs.dim)
    lda = fit_lda(embs.vectors, labels, p)
    projected = lda.apply(embs.vectors)
    lda_mean = projected.mean(axis=0)
    normalized = length_normalize(projected - lda_mean)
    fit = fit_plda(normalized, labels, cfg.plda_iters)
    _logger.info(
        "backend.fitted",
        stage="backend",
        utterances=len(embs),
        speakers=n_classes,
        lda_dim=p,
        loglik=fit.log_likelihoods[-1],
        outcome="success",
    )
    return BackendModel(lda, lda_mean, fit.model)


def apply_backend(model: BackendModel, embs: EmbeddingSet) -> EmbeddingSet:
    if embs.processed:
        raise UsageError("embeddings were already passed through the back-end")
    return embs.with_vectors(model.transform(embs.vectors), processed=True)


def _trial_vectors(embs: EmbeddingSet, trials: TrialList) -> tuple[Matrix, Matrix]:
    missing: list[str] = []
    enroll_rows: list[NDArray[np.float64]] = []
    test_rows: list[NDArray[np.float64]] = []
    for trial in trials:
        if trial.enroll_id in embs:
            enroll = embs.vector(trial.enroll_id)
        else:
            enroll = embs.speaker_mean(trial.enroll_id)
            if enroll is None:
                missing.append(trial.enroll_id)
        if trial.test_id not in embs:
            missing.append(trial.test_id)
        if not missing:
            enroll_rows.append(enroll)
            test_rows.append(embs.vector(trial.test_id))
    if missing:
        unique = list(dict.fromkeys(missing))
        raise DataFormatError(f"{len(unique)} trial id(s) have no embedding, e.g. {', '.join(unique[:10])}")
    return np.vstack(enroll_rows), np.vstack(test_rows)


def score_trials(model: BackendModel, embs: EmbeddingSet, trials: TrialList) -> NDArray[np.float64]:
    """PLDA scores for every trial, in trial order.

    Enrollment ids that are not utterance ids are looked up as speaker
    labels and replaced by the average raw embedding of that speaker.
    """

    if embs.processed:
        raise UsageError("score_trials expects raw embeddings")
    if len(trials) == 0:
        return np.zeros(0)
    enroll, test = _trial_vectors(embs, trials)
    return model.plda.scorer().score_many(model.transform(enroll), model.transform(test))


def encode_backend(model: BackendModel) -> bytes:
    blobs = (
        model.lda.center,
        model.lda.matrix,
        model.lda.eigenvalues,
        model.lda_mean,
        model.plda.mu,
        model.plda.between,
        model.plda.within,
    )
    header = _HEADER.pack(MAGIC, FORMAT_VERSION, model.input_dim, model.dim)
    return header + b"".join(np.ascontiguousarray(b, dtype=_BLOB_DTYPE).tobytes() for b in blobs)


def decode_backend(payload: bytes) -> BackendModel:
    if len(payload) < _HEADER.size:
        raise DataFormatError(f"truncated back-end model at byte 0: {len(payload)} bytes")
    magic, version, d, p = _HEADER.unpack_from(payload)
    if magic != MAGIC:
        raise DataFormatError(f"bad magic {magic!r} at byte 0, expected {MAGIC!r}")
    if version != FORMAT_VERSION:
        raise DataFormatError(f"unsupported back-end version {version} at byte 4")
    shapes = [(d,), (d, p), (p,), (p,), (p,), (p, p), (p, p)]
    offset = _HEADER.size
    arrays: list[NDArray[np.float64]] = []
    for shape in shapes:
        count = int(np.prod(shape))
        size = count * _BLOB_DTYPE.itemsize
        if offset + size > len(payload):
            raise DataFormatError(f"truncated back-end blob at byte {offset}")
        arrays.append(np.frombuffer(payload, _BLOB_DTYPE, count, offset).reshape(shape).astype(np.float64))
        offset += size
    if offset != len(payload):
        raise DataFormatError(f"trailing {len(payload) - offset} bytes at byte {offset}")
    center, lda, eigenvalues, lda_mean, mu, between, within = arrays
    return BackendModel(LdaProjection(center, lda, eigenvalues), lda_mean, PldaModel(mu, between, within))


def save_backend(path: Path, model: BackendModel) -> Path:
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_bytes(encode_backend(model))
    return path


def load_backend(path: Path) -> BackendModel:
    return decode_backend(path.read_bytes())


__all__ = [
    "BackendModel",
    "apply_backend",
    "decode_backend",
    "encode_backend",
    "fit_backend",
    "load_backend",
    "save_backend",
    "score_trials",
]
