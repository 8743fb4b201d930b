"""Centering, LDA and length normalization."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
import scipy.linalg
from numpy.typing import ArrayLike, NDArray

from ..core.errors import ConfigError, DimensionError, DomainError
from ..core.logging import get_logger
from ..numeric import NORM_EPS, Matrix, Vector, as_matrix, ensure_finite

SW_REGULARIZATION = 1e-6

_logger = get_logger("backend.lda")


@dataclass(frozen=True, slots=True)
class LdaProjection:
    center: Vector
    matrix: Matrix
    eigenvalues: Vector

    @property
    def dim(self) -> int:
        return int(self.matrix.shape[1])

    def apply(self, vectors: ArrayLike) -> Matrix:
        x = as_matrix(vectors, name="embeddings")
        if x.shape[1] != self.center.shape[0]:
            raise DimensionError(f"embedding dim {x.shape[1]} != LDA input dim {self.center.shape[0]}")
        return (x - self.center) @ self.matrix


def max_lda_dim(dim: int, n_classes: int) -> int:
    return max(0, min(dim, n_classes - 1))


def class_scatter(vectors: Matrix, labels: NDArray[np.int64]) -> tuple[Matrix, Matrix]:
    """Between- and within-class scatter, both normalized by the sample count."""

    n, d = vectors.shape
    mean = vectors.mean(axis=0)
    between = np.zeros((d, d))
    within = np.zeros((d, d))
    for label in np.unique(labels):
        rows = vectors[labels == label]
        class_mean = rows.mean(axis=0)
        offset = class_mean - mean
        between += rows.shape[0] * np.outer(offset, offset)
        centered = rows - class_mean
        within += centered.T @ centered
    return between / n, within / n


def fit_lda(vectors: ArrayLike, labels: ArrayLike, p: int) -> LdaProjection:
    """Fisher LDA: top-*p* generalized eigenvectors of (between, within) scatter.

    The within-class scatter gets ``1e-6·trace/d`` added to its diagonal.
    Columns are ordered by descending eigenvalue and scaled so the projected
    within-class scatter is the identity.
    """

    x = as_matrix(vectors, name="embeddings")
    y = np.asarray(labels)
    if y.shape != (x.shape[0],):
        raise DimensionError(f"need one label per row: {x.shape[0]} rows, labels shape {y.shape}")
    n_classes = int(np.unique(y).size)
    if n_classes < 2:
        raise DomainError(f"LDA needs at least 2 classes, got {n_classes}")
    limit = max_lda_dim(x.shape[1], n_classes)
    if not 1 <= p <= limit:
        raise ConfigError(f"lda_dim {p} is out of range; the maximum here is {limit} = min(dim, classes - 1)")

    between, within = class_scatter(x, y)
    d = x.shape[1]
    within = within + SW_REGULARIZATION * np.trace(within) / d * np.eye(d)
    if np.trace(within) <= 0:
        within = within + SW_REGULARIZATION * np.eye(d)
    eigenvalues, eigenvectors = scipy.linalg.eigh(between, within)
    order = np.argsort(eigenvalues)[::-1][:p]
    _logger.debug("backend.lda.fitted", dim=d, classes=n_classes, p=p, top=float(eigenvalues[order[0]]))
    return LdaProjection(
        center=x.mean(axis=0),
        matrix=ensure_finite(eigenvectors[:, order], "LDA matrix"),
        eigenvalues=eigenvalues[order],
    )


def length_normalize(vectors: ArrayLike) -> NDArray[np.float64]:
    """Scale a vector (or every row of a matrix) to unit L2 norm.

    Zero rows stay zero and are reported with a ``backend.zero_vector`` warning.
    """

    x = np.asarray(vectors, dtype=np.float64)
    single = x.ndim == 1
    rows = x[None, :] if single else as_matrix(x)
    norms = np.linalg.norm(rows, axis=1, keepdims=True)
    zero = norms[:, 0] <= NORM_EPS
    if np.any(zero):
        _logger.warning("backend.zero_vector", count=int(np.count_nonzero(zero)))
    out = np.where(norms > NORM_EPS, rows / np.maximum(norms, NORM_EPS), 0.0)
    return out[0] if single else out


__all__ = ["LdaProjection", "class_scatter", "fit_lda", "length_normalize", "max_lda_dim"]
