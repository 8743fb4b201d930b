"""Projection layer and the softmax family of training losses.

All four losses share one cross-entropy core and differ only in how the
logits are built from the embeddings ``x`` (N×d) and the projection ``W``
(d×c):

* ``softmax``      ``xᵀW + b``
* ``a_softmax``    ``‖x‖·cos θ_j``, target ``‖x‖·φ(θ_y)``; W columns normalized
* ``am_softmax``   ``s·cos θ_j``, target ``s·(cos θ_y − m)``
* ``aam_softmax``  ``s·cos θ_j``, target ``s·cos(θ_y + m)``

The denominator sums over the target and every other class. The batch
reduction is the mean. Gradients are analytic and flow back through the
row/column normalizations.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Any

import numpy as np
from numpy.typing import ArrayLike, NDArray

from .core.errors import ConfigError, DimensionError, DomainError, NumericError
from .domain.configs import LossConfig, LossKind, build_config
from .network.layers import Parameter
from .numeric import NORM_EPS, Matrix, Rng, Vector, as_matrix, col_l2_normalize, ensure_finite, row_l2_normalize

COS_CLAMP = 1.0 - 1e-7
COS_OVERSHOOT = 1e-9
THETA_OVERSHOOT = 1e-9


@dataclass(slots=True, eq=False)
class ProjectionLayer:
    """``embed_dim × n_classes`` weights; only the plain softmax carries a bias."""

    weight: Parameter
    bias: Parameter | None = None

    @classmethod
    def create(cls, embed_dim: int, n_classes: int, cfg: LossConfig, rng: Rng) -> ProjectionLayer:
        if embed_dim < 1 or n_classes < 2:
            raise DomainError(f"projection needs embed_dim >= 1 and n_classes >= 2, got {embed_dim}×{n_classes}")
        weight = Parameter("projection.weight", rng.normal((embed_dim, n_classes), 1.0 / math.sqrt(embed_dim)))
        bias = Parameter("projection.bias", np.zeros(n_classes), decay=False) if cfg.has_bias else None
        return cls(weight, bias)

    @property
    def embed_dim(self) -> int:
        return int(self.weight.value.shape[0])

    @property
    def n_classes(self) -> int:
        return int(self.weight.value.shape[1])

    def parameters(self) -> list[Parameter]:
        return [self.weight] if self.bias is None else [self.weight, self.bias]

    def apply_gradients(self, out: LossOutput) -> None:
        self.weight.grad = out.dW
        if self.bias is not None and out.db is not None:
            self.bias.grad = out.db


@dataclass(slots=True)
class LossOutput:
    loss: float
    dx: Matrix
    dW: Matrix
    db: Vector | None
    dlogits: Matrix
    mean_target_theta: float
    mean_target_cos: float
    zero_norm_rows: int = 0


def _check_inputs(x: ArrayLike, y: ArrayLike, layer: ProjectionLayer) -> tuple[Matrix, NDArray[np.int64]]:
    xs = as_matrix(x, name="embeddings")
    labels = np.asarray(y)
    if labels.ndim != 1 or labels.shape[0] != xs.shape[0]:
        raise DimensionError(f"need one label per row: {xs.shape[0]} rows, labels shape {labels.shape}")
    if xs.shape[0] < 1:
        raise DimensionError("empty batch")
    if xs.shape[1] != layer.embed_dim:
        raise DimensionError(f"embedding dim {xs.shape[1]} does not match projection {layer.embed_dim}")
    if not np.issubdtype(labels.dtype, np.integer):
        raise DomainError(f"labels must be integers, got dtype {labels.dtype}")
    c = layer.n_classes
    bad = labels[(labels < 0) | (labels >= c)]
    if bad.size:
        raise DomainError(f"label {int(bad[0])} outside [0, {c})")
    return xs, labels.astype(np.int64)


def _cross_entropy(logits: Matrix, y: NDArray[np.int64]) -> tuple[float, Matrix]:
    rows = np.arange(logits.shape[0])
    shifted = logits - logits.max(axis=1, keepdims=True)
    exp = np.exp(shifted)
    total = exp.sum(axis=1, keepdims=True)
    log_z = np.log(total)[:, 0]
    loss = float(np.mean(log_z - shifted[rows, y]))
    probs = exp / total
    probs[rows, y] -= 1.0
    return loss, probs / logits.shape[0]


def _normalize(values: Matrix, axis: int) -> tuple[Matrix, Vector]:
    norms = np.linalg.norm(values, axis=axis)
    unit = row_l2_normalize(values) if axis == 1 else col_l2_normalize(values)
    return unit, norms


def _normalize_backward(grad_unit: Matrix, unit: Matrix, norms: Vector, axis: int) -> Matrix:
    """Chain rule through ``v / max(‖v‖, eps)`` along *axis*."""

    keep = np.expand_dims(norms, axis)
    projected = grad_unit - unit * np.sum(grad_unit * unit, axis=axis, keepdims=True)
    return np.where(keep > NORM_EPS, projected / np.maximum(keep, NORM_EPS), grad_unit / NORM_EPS)


def _cosines(xs: Matrix, layer: ProjectionLayer) -> tuple[Matrix, Vector, Matrix, Vector, Matrix]:
    x_unit, x_norms = _normalize(xs, axis=1)
    w_unit, w_norms = _normalize(layer.weight.value, axis=0)
    return x_unit, x_norms, w_unit, w_norms, x_unit @ w_unit


def _target_stats(cos_target: Vector) -> tuple[float, float]:
    clipped = np.clip(cos_target, -1.0, 1.0)
    return float(np.mean(np.arccos(clipped))), float(np.mean(clipped))


def _finish(
    loss: float, dx: Matrix, dW: Matrix, db: Vector | None, dlogits: Matrix, cos_target: Vector, zero_rows: int
) -> LossOutput:
    if not math.isfinite(loss):
        raise NumericError(f"loss is not finite: {loss}")
    ensure_finite(dx, "loss gradient wrt x")
    ensure_finite(dW, "loss gradient wrt W")
    theta, cos = _target_stats(cos_target)
    return LossOutput(loss, dx, dW, db, dlogits, theta, cos, zero_rows)


def softmax_loss(x: ArrayLike, y: ArrayLike, layer: ProjectionLayer) -> LossOutput:
    xs, labels = _check_inputs(x, y, layer)
    weight = layer.weight.value
    logits = xs @ weight
    if layer.bias is not None:
        logits = logits + layer.bias.value
    loss, dlogits = _cross_entropy(logits, labels)
    db = dlogits.sum(axis=0) if layer.bias is not None else None
    _, _, _, _, cos = _cosines(xs, layer)
    cos_target = cos[np.arange(len(labels)), labels]
    zero_rows = int(np.count_nonzero(np.linalg.norm(xs, axis=1) <= NORM_EPS))
    return _finish(loss, dlogits @ weight.T, xs.T @ dlogits, db, dlogits, cos_target, zero_rows)


def _chebyshev(c: NDArray[np.float64], m: int) -> tuple[NDArray[np.float64], NDArray[np.float64]]:
    """``T_m(c)`` and ``U_{m-1}(c)``, i.e. ``cos(mθ)`` and ``sin(mθ)/sin θ`` for ``c = cos θ``."""

    t_prev, t_cur = np.ones_like(c), c.copy()
    u_prev, u_cur = np.zeros_like(c), np.ones_like(c)
    for _ in range(m - 1):
        t_prev, t_cur = t_cur, 2.0 * c * t_cur - t_prev
        u_prev, u_cur = u_cur, 2.0 * c * u_cur - u_prev
    return t_cur, u_cur


def _check_a_margin(m: float) -> int:
    if m < 1 or not float(m).is_integer():
        raise DomainError(f"a_softmax margin must be an integer >= 1, got {m}")
    return int(m)


def _piece_index(theta: NDArray[np.float64], m: int) -> NDArray[np.int64]:
    return np.minimum(np.floor(theta * m / math.pi), m - 1).astype(np.int64)


def phi_a_softmax(theta: ArrayLike, m: float) -> Any:
    """``φ(θ) = (−1)^k·cos(mθ) − 2k`` on ``[kπ/m, (k+1)π/m]``.

    Values within 1e-9 outside ``[0, π]`` are clamped to the boundary.
    """

    margin = _check_a_margin(m)
    values = np.asarray(theta, dtype=np.float64)
    if np.any(~np.isfinite(values)) or np.any(values < -THETA_OVERSHOOT) or np.any(values > math.pi + THETA_OVERSHOOT):
        raise DomainError(f"theta must lie in [0, pi], got {values.min()}..{values.max()}")
    values = np.clip(values, 0.0, math.pi)
    k = _piece_index(values, margin)
    sign = np.where(k % 2 == 0, 1.0, -1.0)
    result = sign * np.cos(margin * values) - 2.0 * k
    return float(result) if result.ndim == 0 else result


def a_softmax_loss(x: ArrayLike, y: ArrayLike, layer: ProjectionLayer, m: float) -> LossOutput:
    xs, labels = _check_inputs(x, y, layer)
    margin = _check_a_margin(m)
    rows = np.arange(len(labels))
    x_unit, x_norms, w_unit, w_norms, cos = _cosines(xs, layer)
    radius = np.maximum(x_norms, NORM_EPS)
    logits = xs @ w_unit

    cos_target = np.clip(cos[rows, labels], -1.0, 1.0)
    theta = np.arccos(np.clip(cos_target, -COS_CLAMP, COS_CLAMP))
    k = _piece_index(theta, margin)
    sign = np.where(k % 2 == 0, 1.0, -1.0)
    cheb_t, cheb_u = _chebyshev(cos_target, margin)
    phi = sign * cheb_t - 2.0 * k
    dphi = sign * margin * cheb_u
    logits[rows, labels] = radius * phi

    loss, dlogits = _cross_entropy(logits, labels)
    g_target = dlogits[rows, labels].copy()
    g_other = dlogits.copy()
    g_other[rows, labels] = 0.0

    w_target = w_unit[:, labels].T
    dx = g_other @ w_unit.T + g_target[:, None] * (
        phi[:, None] * x_unit + dphi[:, None] * (w_target - cos_target[:, None] * x_unit)
    )
    d_w_unit = xs.T @ g_other
    np.add.at(d_w_unit.T, labels, (g_target * dphi)[:, None] * xs)
    dW = _normalize_backward(d_w_unit, w_unit, w_norms, axis=0)
    zero_rows = int(np.count_nonzero(x_norms <= NORM_EPS))
    return _finish(loss, dx, dW, None, dlogits, cos_target, zero_rows)


def _scaled_cosine_loss(
    xs: Matrix,
    labels: NDArray[np.int64],
    layer: ProjectionLayer,
    s: float,
    target_fn: Any,
) -> LossOutput:
    rows = np.arange(len(labels))
    x_unit, x_norms, w_unit, w_norms, cos = _cosines(xs, layer)
    cos_target = cos[rows, labels]
    target, d_target = target_fn(cos_target)
    logits = s * cos
    logits[rows, labels] = s * target

    loss, dlogits = _cross_entropy(logits, labels)
    d_cos = s * dlogits
    d_cos[rows, labels] *= d_target
    dx = _normalize_backward(d_cos @ w_unit.T, x_unit, x_norms, axis=1)
    dW = _normalize_backward(x_unit.T @ d_cos, w_unit, w_norms, axis=0)
    zero_rows = int(np.count_nonzero(x_norms <= NORM_EPS))
    return _finish(loss, dx, dW, None, dlogits, np.clip(cos_target, -1.0, 1.0), zero_rows)


def am_softmax_loss(x: ArrayLike, y: ArrayLike, layer: ProjectionLayer, m: float, s: float) -> LossOutput:
    if s <= 0 or m < 0:
        raise DomainError(f"am_softmax needs s > 0 and m >= 0, got s={s}, m={m}")
    xs, labels = _check_inputs(x, y, layer)

    def target(cos_target: Vector) -> tuple[Vector, Vector]:
        return cos_target - m, np.ones_like(cos_target)

    return _scaled_cosine_loss(xs, labels, layer, s, target)


def aam_target_cosine(cos_target: ArrayLike, m: float) -> tuple[Vector, Vector]:
    """``cos(θ + m)`` from ``cos θ`` and its derivative; clamped entries get zero gradient."""

    values = np.asarray(cos_target, dtype=np.float64)
    if np.any(np.abs(values) > 1.0 + COS_OVERSHOOT):
        raise NumericError(f"cosine {float(np.max(np.abs(values)))} exceeds 1 beyond tolerance")
    clamped = np.clip(values, -COS_CLAMP, COS_CLAMP)
    inside = (values > -COS_CLAMP) & (values < COS_CLAMP)
    sin = np.sqrt(np.maximum(1.0 - clamped * clamped, 0.0))
    cos_m, sin_m = math.cos(m), math.sin(m)
    value = clamped * cos_m - sin * sin_m
    grad = np.where(inside, cos_m + sin_m * clamped / sin, 0.0)
    return value, grad


def aam_softmax_loss(x: ArrayLike, y: ArrayLike, layer: ProjectionLayer, m: float, s: float) -> LossOutput:
    if s <= 0 or not 0 <= m < math.pi:
        raise DomainError(f"aam_softmax needs s > 0 and m in [0, pi), got s={s}, m={m}")
    xs, labels = _check_inputs(x, y, layer)
    return _scaled_cosine_loss(xs, labels, layer, s, lambda c: aam_target_cosine(c, m))


def loss_dispatch(cfg: LossConfig | dict[str, Any], x: ArrayLike, y: ArrayLike, layer: ProjectionLayer) -> LossOutput:
    """Single entry point used by the trainer."""

    config = cfg if isinstance(cfg, LossConfig) else build_config(LossConfig, **cfg)
    if config.has_bias != (layer.bias is not None):
        raise ConfigError(f"{config.kind} projection must {'' if config.has_bias else 'not '}carry a bias")
    match config.kind:
        case LossKind.SOFTMAX:
            return softmax_loss(x, y, layer)
        case LossKind.A_SOFTMAX:
            return a_softmax_loss(x, y, layer, config.m)
        case LossKind.AM_SOFTMAX:
            return am_softmax_loss(x, y, layer, config.m, config.s)
        case LossKind.AAM_SOFTMAX:
            return aam_softmax_loss(x, y, layer, config.m, config.s)
    raise ConfigError(f"unknown loss kind {config.kind!r}")  # pragma: no cover


__all__ = [
    "LossOutput",
    "ProjectionLayer",
    "a_softmax_loss",
    "aam_softmax_loss",
    "aam_target_cosine",
    "am_softmax_loss",
    "loss_dispatch",
    "phi_a_softmax",
    "softmax_loss",
]
