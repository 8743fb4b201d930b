"""The x-vector network: frame-level TDNN stack, statistics pooling, segment layers."""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Any

import numpy as np
from numpy.typing import ArrayLike, NDArray

from ..core.errors import DimensionError, UsageError
from ..domain.configs import NetworkConfig
from ..numeric import Matrix, Rng, Vector, ensure_finite
from .layers import DenseLayer, InputTooShortError, Mode, Parameter, StatsPool, TdnnLayer


@dataclass(frozen=True, slots=True)
class LayerSpec:
    name: str
    context: tuple[int, ...] | None
    total_context: int | None
    in_dim: int
    out_dim: int


@dataclass(slots=True)
class ForwardCache:
    forward_id: int
    mode: Mode
    frame: list[Any] = field(default_factory=list)
    pool: Any = None
    segment: list[Any] = field(default_factory=list)


class XVectorNet:
    def __init__(self, cfg: NetworkConfig, rng: Rng) -> None:
        self.cfg = cfg
        common = {"rng": rng, "bn_momentum": cfg.bn_momentum, "bn_eps": cfg.bn_eps}
        in_dim = cfg.feat_dim
        self.frame_layers: list[TdnnLayer] = []
        for index, (width, offsets) in enumerate(zip(cfg.frame_widths, cfg.frame_contexts, strict=True), 1):
            self.frame_layers.append(TdnnLayer(f"frame{index}", in_dim, width, offsets, **common))
            in_dim = width
        self.pool = StatsPool(cfg.pool_eps)
        in_dim *= 2
        first = len(self.frame_layers) + 1
        self.segment_layers: list[DenseLayer] = []
        for index, width in enumerate(cfg.segment_widths, first):
            self.segment_layers.append(DenseLayer(f"segment{index}", in_dim, width, **common))
            in_dim = width
        self._forward_id = 0

    @property
    def min_frames(self) -> int:
        return self.cfg.receptive_field

    @property
    def embedding_dim(self) -> int:
        return self.cfg.embedding_dim

    @property
    def output_dim(self) -> int:
        return self.cfg.output_dim

    def parameters(self) -> list[Parameter]:
        params: list[Parameter] = []
        for layer in (*self.frame_layers, *self.segment_layers):
            params += layer.parameters()
        return params

    def buffers(self) -> dict[str, NDArray[np.float64]]:
        out: dict[str, NDArray[np.float64]] = {}
        for layer in (*self.frame_layers, *self.segment_layers):
            out.update(layer.buffers())
        return out

    def load_buffers(self, values: dict[str, NDArray[np.float64]]) -> None:
        for layer in (*self.frame_layers, *self.segment_layers):
            bn = layer.batchnorm
            if bn is None:
                continue
            bn.running_mean = np.array(values[f"{bn.name}.running_mean"], dtype=np.float64)
            bn.running_var = np.array(values[f"{bn.name}.running_var"], dtype=np.float64)

    def zero_grad(self) -> None:
        for param in self.parameters():
            param.zero_grad()

    def _as_batch(self, frames: ArrayLike) -> NDArray[np.float64]:
        x = np.asarray(frames, dtype=np.float64)
        if x.ndim == 2:
            x = x[None, :, :]
        if x.ndim != 3:
            raise DimensionError(f"expected T×D or B×T×D frames, got shape {x.shape}")
        if x.shape[2] != self.cfg.feat_dim:
            raise DimensionError(f"expected feature dim {self.cfg.feat_dim}, got {x.shape[2]}")
        if x.shape[1] < self.min_frames:
            raise InputTooShortError(x.shape[1], self.min_frames)
        return x

    def _pooled(self, x: NDArray[np.float64], mode: Mode, cache: ForwardCache | None) -> Matrix:
        for layer in self.frame_layers:
            x, layer_cache = layer.forward(x, mode)
            if cache is not None:
                cache.frame.append(layer_cache)
        pooled, pool_cache = self.pool.forward(x)
        if cache is not None:
            cache.pool = pool_cache
        return pooled

    def forward(self, frames: ArrayLike, mode: Mode = Mode.TRAIN) -> tuple[Matrix, ForwardCache]:
        """Run the whole trunk; returns the last segment layer's output and a cache for backward."""

        x = self._as_batch(frames)
        if mode is Mode.TRAIN:
            self._forward_id += 1
        cache = ForwardCache(self._forward_id, mode)
        out = self._pooled(x, mode, cache)
        for layer in self.segment_layers:
            out, layer_cache = layer.forward(out, mode)
            cache.segment.append(layer_cache)
        return ensure_finite(out, "network output"), cache

    def backward(self, cache: ForwardCache | None, grad_output: ArrayLike) -> NDArray[np.float64]:
        """Fill every parameter's gradient and return d loss / d frames."""

        if cache is None:
            raise UsageError("backward called without a forward cache")
        if cache.mode is not Mode.TRAIN:
            raise UsageError("backward needs a cache from a training-mode forward")
        if cache.forward_id != self._forward_id:
            raise UsageError(
                f"stale forward cache {cache.forward_id}, latest training forward is {self._forward_id}"
            )
        grad = np.asarray(grad_output, dtype=np.float64)
        for layer, layer_cache in zip(reversed(self.segment_layers), reversed(cache.segment), strict=True):
            grad = layer.backward(grad, layer_cache)
        grad = self.pool.backward(grad, cache.pool)
        for layer, layer_cache in zip(reversed(self.frame_layers), reversed(cache.frame), strict=True):
            grad = layer.backward(grad, layer_cache)
        return grad

    def embed(self, frames: ArrayLike) -> Matrix:
        """Eval-mode embeddings: the first segment layer's affine output, before ReLU and BN."""

        pooled = self._pooled(self._as_batch(frames), Mode.EVAL, None)
        return ensure_finite(self.segment_layers[0].affine(pooled), "embedding")

    def extract_embedding(self, frames: ArrayLike) -> Vector:
        x = np.asarray(frames, dtype=np.float64)
        if x.ndim != 2:
            raise DimensionError(f"expected T×D frames, got shape {x.shape}")
        return self.embed(x)[0]

    def describe(self) -> list[LayerSpec]:
        specs: list[LayerSpec] = []
        total = 1
        for layer in self.frame_layers:
            total += layer.span
            specs.append(LayerSpec(layer.name, layer.offsets, total, layer.in_dim * len(layer.offsets), layer.out_dim))
        pooled_dim = 2 * self.frame_layers[-1].out_dim
        specs.append(LayerSpec("stats_pooling", None, None, self.frame_layers[-1].out_dim, pooled_dim))
        for layer in self.segment_layers:
            specs.append(LayerSpec(layer.name, None, None, layer.in_dim, layer.out_dim))
        return specs


def parameter_count(cfg: NetworkConfig, n_classes: int = 0, *, with_bias: bool = False) -> int:
    """Trainable scalars of the trunk plus an optional ``embedding → n_classes`` projection."""

    total = 0
    in_dim = cfg.feat_dim
    for width, offsets in zip(cfg.frame_widths, cfg.frame_contexts, strict=True):
        total += in_dim * len(offsets) * width + 3 * width
        in_dim = width
    in_dim *= 2
    for width in cfg.segment_widths:
        total += in_dim * width + 3 * width
        in_dim = width
    if n_classes:
        total += in_dim * n_classes + (n_classes if with_bias else 0)
    return total


__all__ = ["ForwardCache", "LayerSpec", "XVectorNet", "parameter_count"]
