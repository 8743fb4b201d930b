"""Two-covariance PLDA: ``x = mu + u + e`` with ``u ~ N(0, B)`` and ``e ~ N(0, W)``.

Training is EM over the latent speaker variable; scoring is the closed-form
log-likelihood ratio between the same-speaker and different-speaker
hypotheses for one enrollment and one test vector.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
import scipy.linalg
from numpy.typing import ArrayLike, NDArray

from ..core.errors import DimensionError, DomainError, NumericError
from ..core.logging import get_logger
from ..numeric import Matrix, Vector, as_matrix, ensure_finite

PSD_TOLERANCE = -1e-8
LOGLIK_SLACK = 1e-8
WITHIN_REGULARIZATION = 1e-6

_logger = get_logger("backend.plda")


def _sym(matrix: Matrix) -> Matrix:
    return 0.5 * (matrix + matrix.T)


def _logdet(matrix: Matrix, what: str) -> float:
    sign, value = np.linalg.slogdet(matrix)
    if sign <= 0:
        raise NumericError(f"{what} is not positive definite")
    return float(value)


@dataclass(frozen=True, slots=True)
class PldaModel:
    mu: Vector
    between: Matrix
    within: Matrix

    @property
    def dim(self) -> int:
        return int(self.mu.shape[0])

    def check(self) -> None:
        """Raise :class:`NumericError` unless W is PD and B is PSD."""

        if np.linalg.eigvalsh(_sym(self.within)).min() <= 0:
            raise NumericError("PLDA within-speaker covariance is not positive definite")
        if np.linalg.eigvalsh(_sym(self.between)).min() < PSD_TOLERANCE:
            raise NumericError("PLDA between-speaker covariance is not positive semidefinite")

    def scorer(self) -> PldaScorer:
        d = self.dim
        total = self.between + self.within
        joint = np.block([[total, self.between], [self.between, total]])
        joint_inv = scipy.linalg.inv(joint)
        same_diag = _sym(joint_inv[:d, :d])
        cross = _sym(joint_inv[:d, d:])
        quad = _sym(scipy.linalg.inv(total)) - same_diag
        const = -0.5 * _logdet(joint, "same-speaker covariance") + _logdet(total, "total covariance")
        return PldaScorer(self.mu, quad, -cross, const)


@dataclass(frozen=True, slots=True)
class PldaScorer:
    """``llr = const + ½eᵀQe + ½tᵀQt + eᵀPt`` on mean-removed vectors."""

    mu: Vector
    quad: Matrix
    cross: Matrix
    const: float

    def score_many(self, enroll: ArrayLike, test: ArrayLike) -> NDArray[np.float64]:
        e = as_matrix(enroll, name="enroll") - self.mu
        t = as_matrix(test, name="test") - self.mu
        if e.shape != t.shape or e.shape[1] != self.mu.shape[0]:
            raise DimensionError(f"score shapes {e.shape} and {t.shape} do not match model dim {self.mu.shape[0]}")
        quad = 0.5 * (np.einsum("ij,jk,ik->i", e, self.quad, e) + np.einsum("ij,jk,ik->i", t, self.quad, t))
        return ensure_finite(self.const + quad + np.einsum("ij,jk,ik->i", e, self.cross, t), "PLDA scores")


def plda_score(model: PldaModel, enroll: ArrayLike, test: ArrayLike) -> float:
    e = np.asarray(enroll, dtype=np.float64)
    t = np.asarray(test, dtype=np.float64)
    if e.shape != (model.dim,) or t.shape != (model.dim,):
        raise DimensionError(f"expected vectors of dim {model.dim}, got {e.shape} and {t.shape}")
    return float(model.scorer().score_many(e[None, :], t[None, :])[0])


@dataclass(slots=True)
class _ClassStats:
    counts: NDArray[np.int64]
    sums: Matrix
    groups: list[Matrix]


def _class_stats(x: Matrix, labels: NDArray[np.int64]) -> _ClassStats:
    classes = np.unique(labels)
    groups = [x[labels == c] for c in classes]
    return _ClassStats(
        counts=np.array([g.shape[0] for g in groups], dtype=np.int64),
        sums=np.vstack([g.sum(axis=0) for g in groups]),
        groups=groups,
    )


def plda_log_likelihood(x: ArrayLike, labels: ArrayLike, model: PldaModel) -> float:
    """Marginal log-likelihood of labelled data under *model* (speaker variables integrated out)."""

    data = as_matrix(x, name="embeddings")
    stats = _class_stats(data, np.asarray(labels))
    d = model.dim
    w_inv = scipy.linalg.inv(model.within)
    logdet_w = _logdet(model.within, "within covariance")
    total = 0.0
    for n, group in zip(stats.counts, stats.groups, strict=True):
        z = group - model.mu
        s = z.sum(axis=0)
        spread = model.within + n * model.between
        shrink = w_inv - scipy.linalg.inv(spread)
        quad = float(np.einsum("ij,jk,ik->", z, w_inv, z)) - float(s @ shrink @ s) / n
        total += -0.5 * (n * d * math.log(2 * math.pi) + (n - 1) * logdet_w + _logdet(spread, "W + nB") + quad)
    return total


def _regularize_within(within: Matrix) -> Matrix:
    try:
        scipy.linalg.cholesky(within, lower=True)
        return within
    except np.linalg.LinAlgError:
        pass
    d = within.shape[0]
    bump = WITHIN_REGULARIZATION * max(float(np.trace(within)) / d, 1.0)
    _logger.warning("backend.plda.regularized", outcome="warn", amount=bump)
    fixed = within + bump * np.eye(d)
    try:
        scipy.linalg.cholesky(fixed, lower=True)
    except np.linalg.LinAlgError as exc:
        raise NumericError("within-speaker covariance is singular even after regularization") from exc
    return fixed


def initial_model(x: Matrix, labels: NDArray[np.int64]) -> PldaModel:
    stats = _class_stats(x, labels)
    means = stats.sums / stats.counts[:, None]
    mu = x.mean(axis=0)
    centered_means = means - mu
    between = centered_means.T @ centered_means / len(stats.counts)
    within = np.zeros((x.shape[1], x.shape[1]))
    for group, mean in zip(stats.groups, means, strict=True):
        residual = group - mean
        within += residual.T @ residual
    within = _regularize_within(_sym(within / x.shape[0]))
    return PldaModel(mu, _sym(between), within)


def em_step(x: Matrix, labels: NDArray[np.int64], model: PldaModel) -> PldaModel:
    stats = _class_stats(x, labels)
    d = model.dim
    posterior_means = np.empty((len(stats.counts), d))
    posterior_covs = np.empty((len(stats.counts), d, d))
    for row, n in enumerate(stats.counts):
        # y | x ~ N(mu + K(x̄ - mu), B - K B) with K = B (B + W/n)^-1
        gain = scipy.linalg.solve(model.between + model.within / n, model.between, assume_a="sym").T
        posterior_means[row] = model.mu + gain @ (stats.sums[row] / n - model.mu)
        posterior_covs[row] = _sym(model.between - gain @ model.between)

    mu = posterior_means.mean(axis=0)
    offsets = posterior_means - mu
    between = posterior_covs.mean(axis=0) + offsets.T @ offsets / len(stats.counts)
    within = np.zeros((d, d))
    for row, group in enumerate(stats.groups):
        residual = group - posterior_means[row]
        within += residual.T @ residual + stats.counts[row] * posterior_covs[row]
    within = _regularize_within(_sym(within / x.shape[0]))
    return PldaModel(mu, _sym(between), within)


@dataclass(slots=True)
class PldaFit:
    model: PldaModel
    log_likelihoods: list[float] = field(default_factory=list)


def fit_plda(vectors: ArrayLike, labels: ArrayLike, iters: int = 10, *, init: PldaModel | None = None) -> PldaFit:
    """EM training; the log-likelihood of each iterate is recorded and must not decrease."""

    x = as_matrix(vectors, name="embeddings")
    y = np.asarray(labels)
    if y.shape != (x.shape[0],):
        raise DimensionError(f"need one label per row: {x.shape[0]} rows, labels shape {y.shape}")
    if np.unique(y).size < 2:
        raise DomainError("PLDA needs at least 2 speakers")
    if iters < 0:
        raise DomainError(f"iters must be non-negative, got {iters}")

    model = init if init is not None else initial_model(x, y)
    history = [plda_log_likelihood(x, y, model)]
    for iteration in range(1, iters + 1):
        model = em_step(x, y, model)
        value = plda_log_likelihood(x, y, model)
        if value < history[-1] - LOGLIK_SLACK * max(1.0, abs(history[-1])):
            raise NumericError(f"PLDA log-likelihood decreased at iteration {iteration}: {history[-1]} -> {value}")
        history.append(value)
        _logger.debug("backend.plda.iteration", step=iteration, loglik=value)
    model.check()
    return PldaFit(model, history)


__all__ = [
    "PldaFit",
    "PldaModel",
    "PldaScorer",
    "em_step",
    "fit_plda",
    "initial_model",
    "plda_log_likelihood",
    "plda_score",
]
