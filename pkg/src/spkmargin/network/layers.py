"""Layers of the x-vector trunk with explicit forward and backward passes.

Inside a block the order is affine → ReLU → BatchNorm. Gradients are
written (not accumulated) into each :class:`Parameter` by ``backward``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from enum import StrEnum
from typing import Any

import numpy as np
from numpy.typing import NDArray

from ..core.errors import DimensionError, DomainError
from ..numeric import Rng, reduce_rows_mean_std


class Mode(StrEnum):
    TRAIN = "train"
    EVAL = "eval"


class InputTooShortError(DomainError):
    """Raised when a segment has fewer frames than the receptive field."""

    def __init__(self, got: int, minimum: int) -> None:
        super().__init__(f"input has {got} frames, at least {minimum} are required")
        self.got = got
        self.minimum = minimum


@dataclass(slots=True, eq=False)
class Parameter:
    name: str
    value: NDArray[np.float64]
    decay: bool = True
    grad: NDArray[np.float64] = field(init=False, repr=False)

    def __post_init__(self) -> None:
        self.value = np.asarray(self.value, dtype=np.float64)
        self.grad = np.zeros_like(self.value)

    def zero_grad(self) -> None:
        self.grad = np.zeros_like(self.value)

    @property
    def shape(self) -> tuple[int, ...]:
        return tuple(self.value.shape)


class BatchNorm:
    """Per-feature normalization over the rows of a 2-D input."""

    def __init__(self, name: str, dim: int, *, momentum: float = 0.1, eps: float = 1e-5) -> None:
        self.name = name
        self.momentum = momentum
        self.eps = eps
        self.gamma = Parameter(f"{name}.gamma", np.ones(dim), decay=False)
        self.beta = Parameter(f"{name}.beta", np.zeros(dim), decay=False)
        self.running_mean = np.zeros(dim)
        self.running_var = np.ones(dim)

    def parameters(self) -> list[Parameter]:
        return [self.gamma, self.beta]

    def buffers(self) -> dict[str, NDArray[np.float64]]:
        return {f"{self.name}.running_mean": self.running_mean, f"{self.name}.running_var": self.running_var}

    def forward(self, x: NDArray[np.float64], mode: Mode) -> tuple[NDArray[np.float64], Any]:
        if mode is Mode.EVAL:
            x_hat = (x - self.running_mean) / np.sqrt(self.running_var + self.eps)
            return self.gamma.value * x_hat + self.beta.value, None

        rows = x.shape[0]
        mean = x.mean(axis=0)
        var = x.var(axis=0)
        inv_std = 1.0 / np.sqrt(var + self.eps)
        x_hat = (x - mean) * inv_std
        unbiased = var * rows / (rows - 1) if rows > 1 else var
        self.running_mean = (1.0 - self.momentum) * self.running_mean + self.momentum * mean
        self.running_var = (1.0 - self.momentum) * self.running_var + self.momentum * unbiased
        return self.gamma.value * x_hat + self.beta.value, (x_hat, inv_std)

    def backward(self, grad: NDArray[np.float64], cache: Any) -> NDArray[np.float64]:
        x_hat, inv_std = cache
        rows = grad.shape[0]
        self.gamma.grad = np.sum(grad * x_hat, axis=0)
        self.beta.grad = np.sum(grad, axis=0)
        g_hat = grad * self.gamma.value
        return (inv_std / rows) * (
            rows * g_hat - g_hat.sum(axis=0) - x_hat * np.sum(g_hat * x_hat, axis=0)
        )


@dataclass(slots=True)
class _BlockCache:
    inputs: NDArray[np.float64]
    pre_activation: NDArray[np.float64]
    bn: Any


class _AffineBlock:
    def __init__(
        self,
        name: str,
        fan_in: int,
        out_dim: int,
        *,
        rng: Rng,
        has_relu: bool = True,
        has_batchnorm: bool = True,
        bn_momentum: float = 0.1,
        bn_eps: float = 1e-5,
    ) -> None:
        self.name = name
        self.has_relu = has_relu
        # He initialisation for ReLU layers.
        self.weight = Parameter(f"{name}.weight", rng.normal((fan_in, out_dim), math.sqrt(2.0 / fan_in)))
        self.bias = Parameter(f"{name}.bias", np.zeros(out_dim), decay=False)
        self.batchnorm = (
            BatchNorm(f"{name}.bn", out_dim, momentum=bn_momentum, eps=bn_eps) if has_batchnorm else None
        )

    @property
    def has_batchnorm(self) -> bool:
        return self.batchnorm is not None

    @property
    def out_dim(self) -> int:
        return int(self.weight.value.shape[1])

    def parameters(self) -> list[Parameter]:
        params = [self.weight, self.bias]
        if self.batchnorm is not None:
            params += self.batchnorm.parameters()
        return params

    def buffers(self) -> dict[str, NDArray[np.float64]]:
        return self.batchnorm.buffers() if self.batchnorm is not None else {}

    def _apply(self, inputs: NDArray[np.float64], mode: Mode) -> tuple[NDArray[np.float64], _BlockCache]:
        z = inputs @ self.weight.value + self.bias.value
        out = np.maximum(z, 0.0) if self.has_relu else z
        bn_cache = None
        if self.batchnorm is not None:
            out, bn_cache = self.batchnorm.forward(out, mode)
        return out, _BlockCache(inputs, z, bn_cache)

    def _unapply(self, grad: NDArray[np.float64], cache: _BlockCache) -> NDArray[np.float64]:
        if self.batchnorm is not None:
            grad = self.batchnorm.backward(grad, cache.bn)
        if self.has_relu:
            grad = grad * (cache.pre_activation > 0.0)
        self.weight.grad = cache.inputs.T @ grad
        self.bias.grad = grad.sum(axis=0)
        return grad @ self.weight.value.T


class TdnnLayer(_AffineBlock):
    """Gather frames at the context offsets, concatenate, then a dense map.

    Frames without full context are dropped, so the output is shorter than
    the input by ``offsets[-1] - offsets[0]``.
    """

    def __init__(self, name: str, in_dim: int, out_dim: int, offsets: tuple[int, ...], **kwargs: Any) -> None:
        if not offsets or any(b <= a for a, b in zip(offsets, offsets[1:], strict=False)):
            raise DomainError(f"{name}: context offsets must be strictly increasing, got {offsets}")
        self.offsets = tuple(int(o) for o in offsets)
        self.in_dim = in_dim
        super().__init__(name, in_dim * len(self.offsets), out_dim, **kwargs)

    @property
    def span(self) -> int:
        return self.offsets[-1] - self.offsets[0]

    def forward(self, x: NDArray[np.float64], mode: Mode) -> tuple[NDArray[np.float64], _BlockCache]:
        batch, frames, dim = x.shape
        if dim != self.in_dim:
            raise DimensionError(f"{self.name}: expected {self.in_dim} input dims, got {dim}")
        out_frames = frames - self.span
        if out_frames < 1:
            raise InputTooShortError(frames, self.span + 1)
        first = self.offsets[0]
        gathered = np.concatenate(
            [x[:, o - first : o - first + out_frames, :] for o in self.offsets], axis=2
        )
        out, cache = self._apply(gathered.reshape(batch * out_frames, -1), mode)
        return out.reshape(batch, out_frames, self.out_dim), cache

    def backward(self, grad: NDArray[np.float64], cache: _BlockCache) -> NDArray[np.float64]:
        batch, out_frames, _ = grad.shape
        d_gathered = self._unapply(grad.reshape(batch * out_frames, -1), cache)
        d_gathered = d_gathered.reshape(batch, out_frames, len(self.offsets), self.in_dim)
        dx = np.zeros((batch, out_frames + self.span, self.in_dim))
        first = self.offsets[0]
        for k, o in enumerate(self.offsets):
            dx[:, o - first : o - first + out_frames, :] += d_gathered[:, :, k, :]
        return dx


class DenseLayer(_AffineBlock):
    """Segment-level affine block (a TDNN layer with the single offset 0)."""

    def __init__(self, name: str, in_dim: int, out_dim: int, **kwargs: Any) -> None:
        self.in_dim = in_dim
        self.offsets = (0,)
        super().__init__(name, in_dim, out_dim, **kwargs)

    def forward(self, x: NDArray[np.float64], mode: Mode) -> tuple[NDArray[np.float64], _BlockCache]:
        if x.shape[-1] != self.in_dim:
            raise DimensionError(f"{self.name}: expected {self.in_dim} input dims, got {x.shape[-1]}")
        return self._apply(x, mode)

    def affine(self, x: NDArray[np.float64]) -> NDArray[np.float64]:
        return x @ self.weight.value + self.bias.value

    def backward(self, grad: NDArray[np.float64], cache: _BlockCache) -> NDArray[np.float64]:
        return self._unapply(grad, cache)


class StatsPool:
    """Concatenated per-dimension mean and standard deviation over frames."""

    def __init__(self, eps: float = 1e-10) -> None:
        self.eps = eps

    def forward(self, x: NDArray[np.float64]) -> tuple[NDArray[np.float64], Any]:
        mean, std = reduce_rows_mean_std(x, self.eps)
        return np.concatenate([mean, std], axis=-1), (x, mean, std)

    def backward(self, grad: NDArray[np.float64], cache: Any) -> NDArray[np.float64]:
        x, mean, std = cache
        frames = x.shape[1]
        half = mean.shape[-1]
        d_mean, d_std = grad[:, :half], grad[:, half:]
        centered = x - mean[:, None, :]
        return (d_mean[:, None, :] + d_std[:, None, :] * centered / std[:, None, :]) / frames


__all__ = [
    "BatchNorm",
    "DenseLayer",
    "InputTooShortError",
    "Mode",
    "Parameter",
    "StatsPool",
    "TdnnLayer",
]
