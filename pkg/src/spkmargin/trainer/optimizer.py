"""SGD with momentum, weight decay and global-norm clipping; linear warmup."""

from __future__ import annotations

import math
from collections.abc import Sequence
from dataclasses import dataclass, field

import numpy as np
from numpy.typing import NDArray

from ..core.errors import DomainError, NumericError
from ..domain.configs import TrainConfig
from ..network.layers import Parameter


def lr_at(step: int, cfg: TrainConfig) -> float:
    if step < 0:
        raise DomainError(f"step must be non-negative, got {step}")
    if cfg.warmup_batches == 0:
        return cfg.lr_peak
    return cfg.lr_peak * min(step / cfg.warmup_batches, 1.0)


@dataclass(slots=True)
class OptimizerState:
    velocity: dict[str, NDArray[np.float64]] = field(default_factory=dict)
    step: int = 0

    def buffer_for(self, param: Parameter) -> NDArray[np.float64]:
        buffer = self.velocity.get(param.name)
        if buffer is None:
            buffer = np.zeros_like(param.value)
            self.velocity[param.name] = buffer
        return buffer


def global_norm(grads: Sequence[NDArray[np.float64]]) -> float:
    return math.sqrt(sum(float(np.sum(g * g)) for g in grads))


def clip_by_global_norm(
    grads: Sequence[NDArray[np.float64]], max_norm: float
) -> tuple[list[NDArray[np.float64]], float]:
    """Scale all gradients together so their joint L2 norm is at most *max_norm*.

    Returns the (possibly scaled) gradients and the norm before clipping.
    """

    norm = global_norm(grads)
    if norm <= max_norm or norm == 0.0:
        return list(grads), norm
    scale = max_norm / norm
    return [g * scale for g in grads], norm


def sgd_step(params: Sequence[Parameter], state: OptimizerState, cfg: TrainConfig, lr: float) -> float:
    """Apply one update from ``param.grad``; returns the pre-clip gradient norm.

    Order: clip the raw gradients, add ``weight_decay·param`` for decayed
    parameters, then ``v ← momentum·v + g`` and ``param ← param − lr·v``.
    """

    for param in params:
        if param.grad.shape != param.value.shape:
            raise DomainError(f"{param.name}: gradient shape {param.grad.shape} != {param.value.shape}")
        if not np.all(np.isfinite(param.grad)):
            raise NumericError(f"non-finite gradient in {param.name} at step {state.step}")

    clipped, norm = clip_by_global_norm([p.grad for p in params], cfg.max_grad_norm)
    for param, grad in zip(params, clipped, strict=True):
        if cfg.weight_decay and param.decay:
            grad = grad + cfg.weight_decay * param.value
        velocity = state.buffer_for(param)
        velocity *= cfg.momentum
        velocity += grad
        if lr:
            param.value = param.value - lr * velocity
    state.step += 1
    return norm


__all__ = ["OptimizerState", "clip_by_global_norm", "global_norm", "lr_at", "sgd_step"]
