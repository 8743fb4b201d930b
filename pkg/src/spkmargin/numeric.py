"""Dense float64 kernels shared by the network, losses and back-end.

Matrices are plain ``numpy`` arrays of dtype float64. Every public helper
returns finite values or raises :class:`NumericError`.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Any, TypeAlias

import numpy as np
from numpy.typing import ArrayLike, NDArray

from .core.errors import DimensionError, DomainError, NumericError

Matrix: TypeAlias = NDArray[np.float64]
Vector: TypeAlias = NDArray[np.float64]

NORM_EPS = 1e-12
STD_EPS = 1e-10


@dataclass(slots=True)
class Rng:
    """Seedable random stream backed by the counter-based Philox generator."""

    seed: int
    generator: np.random.Generator = field(init=False, repr=False)

    def __post_init__(self) -> None:
        if not 0 <= int(self.seed) < 2**64:
            raise DomainError(f"seed must fit in 64 bits, got {self.seed}")
        self.seed = int(self.seed)
        self.generator = np.random.Generator(np.random.Philox(self.seed))

    def child(self, stream: int) -> Rng:
        """Return an independent stream derived from ``(seed, stream)``."""

        state = np.random.SeedSequence([self.seed, int(stream)]).generate_state(1, np.uint64)
        return Rng(int(state[0]))

    def normal(self, size: Any = None, scale: float = 1.0) -> Any:
        return self.generator.normal(0.0, scale, size=size)

    def uniform(self, low: float = 0.0, high: float = 1.0, size: Any = None) -> Any:
        return self.generator.uniform(low, high, size=size)

    def integers(self, low: int, high: int, size: Any = None) -> Any:
        """Draw integers from the closed range ``[low, high]``."""

        return self.generator.integers(low, high, size=size, endpoint=True)

    def permutation(self, n: int) -> NDArray[np.int64]:
        return self.generator.permutation(n)


def as_matrix(values: ArrayLike, *, name: str = "matrix") -> Matrix:
    array = np.asarray(values, dtype=np.float64)
    if array.ndim != 2:
        raise DimensionError(f"{name} must be 2-D, got shape {array.shape}")
    return array


def ensure_finite(values: NDArray[Any], what: str) -> NDArray[Any]:
    if not np.all(np.isfinite(values)):
        bad = int(np.size(values) - np.count_nonzero(np.isfinite(values)))
        raise NumericError(f"{what}: {bad} non-finite value(s)")
    return values


def matmul(a: ArrayLike, b: ArrayLike) -> Matrix:
    left = as_matrix(a, name="left operand")
    right = as_matrix(b, name="right operand")
    if left.shape[1] != right.shape[0]:
        raise DimensionError(f"cannot multiply {left.shape} by {right.shape}")
    return ensure_finite(left @ right, "matmul")


def row_l2_normalize(a: ArrayLike, eps: float = NORM_EPS) -> Matrix:
    if eps <= 0:
        raise DomainError(f"eps must be positive, got {eps}")
    matrix = as_matrix(a)
    norms = np.linalg.norm(matrix, axis=1, keepdims=True)
    return ensure_finite(matrix / np.maximum(norms, eps), "row_l2_normalize")


def col_l2_normalize(w: ArrayLike, eps: float = NORM_EPS) -> Matrix:
    if eps <= 0:
        raise DomainError(f"eps must be positive, got {eps}")
    matrix = as_matrix(w)
    norms = np.linalg.norm(matrix, axis=0, keepdims=True)
    return ensure_finite(matrix / np.maximum(norms, eps), "col_l2_normalize")


def reduce_rows_mean_std(x: ArrayLike, eps: float = STD_EPS) -> tuple[NDArray[np.float64], NDArray[np.float64]]:
    """Per-column mean and ``sqrt(var + eps)`` over the row axis.

    The variance divides by T. Leading batch axes are allowed; the
    reduction runs over axis ``-2``.
    """

    if eps < 0:
        raise DomainError(f"eps must be non-negative, got {eps}")
    array = np.asarray(x, dtype=np.float64)
    if array.ndim < 2 or array.shape[-2] < 1 or array.shape[-1] < 1:
        raise DomainError(f"need at least one row and one column, got shape {array.shape}")
    mean = array.mean(axis=-2)
    centered = array - mean[..., None, :]
    var = np.mean(centered * centered, axis=-2)
    std = np.sqrt(var + eps)
    return ensure_finite(mean, "mean"), ensure_finite(std, "std")


__all__ = [
    "Matrix",
    "NORM_EPS",
    "Rng",
    "STD_EPS",
    "Vector",
    "as_matrix",
    "col_l2_normalize",
    "ensure_finite",
    "matmul",
    "reduce_rows_mean_std",
    "row_l2_normalize",
]
