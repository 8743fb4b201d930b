"""Central finite differences shared by the gradient tests."""

from __future__ import annotations

from collections.abc import Callable

import numpy as np
from numpy.typing import NDArray

STEP = 1e-5
RTOL = 1e-3
ATOL = 1e-7


def numeric_gradient(
    loss: Callable[[], float], values: NDArray[np.float64], indices: list[tuple[int, ...]], step: float = STEP
) -> NDArray[np.float64]:
    """d loss / d values[index] for each index; *values* is perturbed in place and restored."""

    out = np.empty(len(indices))
    for row, index in enumerate(indices):
        saved = values[index]
        values[index] = saved + step
        plus = loss()
        values[index] = saved - step
        minus = loss()
        values[index] = saved
        out[row] = (plus - minus) / (2 * step)
    return out


def sample_indices(shape: tuple[int, ...], count: int, seed: int = 0) -> list[tuple[int, ...]]:
    rng = np.random.default_rng(seed)
    size = int(np.prod(shape))
    flat = rng.choice(size, size=min(count, size), replace=False)
    return [tuple(int(i) for i in np.unravel_index(f, shape)) for f in flat]


def assert_gradients_close(analytic: NDArray[np.float64], numeric: NDArray[np.float64]) -> None:
    scale = np.maximum(np.abs(analytic), np.abs(numeric))
    bad = np.abs(analytic - numeric) > RTOL * scale + ATOL
    assert not bad.any(), f"analytic {analytic[bad]} vs numeric {numeric[bad]}"
