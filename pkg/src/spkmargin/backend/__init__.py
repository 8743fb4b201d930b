"""Embedding post-processing and PLDA scoring."""

from .embeddings import (
    EmbeddingSet,
    embeddings_from_archive,
    embeddings_to_archive,
    read_embeddings,
    write_embeddings,
)
from .lda import LdaProjection, class_scatter, fit_lda, length_normalize, max_lda_dim
from .model import (
    BackendModel,
    apply_backend,
    decode_backend,
    encode_backend,
    fit_backend,
    load_backend,
    save_backend,
    score_trials,
)
from .plda import PldaFit, PldaModel, PldaScorer, em_step, fit_plda, initial_model, plda_log_likelihood, plda_score

__all__ = [
    "BackendModel",
    "EmbeddingSet",
    "LdaProjection",
    "PldaFit",
    "PldaModel",
    "PldaScorer",
    "apply_backend",
    "class_scatter",
    "decode_backend",
    "em_step",
    "embeddings_from_archive",
    "embeddings_to_archive",
    "encode_backend",
    "fit_backend",
    "fit_lda",
    "fit_plda",
    "initial_model",
    "length_normalize",
    "load_backend",
    "max_lda_dim",
    "plda_log_likelihood",
    "plda_score",
    "read_embeddings",
    "save_backend",
    "score_trials",
    "write_embeddings",
]
