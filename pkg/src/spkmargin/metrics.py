"""Detection metrics over scored trials: DET sweep, EER and (min)DCF.

A trial is accepted when ``score >= threshold``. The sweep visits every
distinct score plus ``+inf``, so it has ``len(unique(scores)) + 1`` points.
"""

from __future__ import annotations

import math
from collections.abc import Mapping
from dataclasses import dataclass
from typing import Any

import numpy as np
from numpy.typing import ArrayLike, NDArray

from .core.errors import DataFormatError, DimensionError, DomainError
from .dataio.trials import TrialList
from .domain.configs import DcfParams

P_TARGETS = (0.01, 0.001)


@dataclass(frozen=True, slots=True)
class ScoredTrials:
    scores: NDArray[np.float64]
    is_target: NDArray[np.bool_]

    def __post_init__(self) -> None:
        scores = np.asarray(self.scores, dtype=np.float64)
        labels = np.asarray(self.is_target, dtype=bool)
        if scores.ndim != 1 or scores.shape != labels.shape:
            raise DimensionError(f"{scores.shape} scores for {labels.shape} labels")
        if not np.all(np.isfinite(scores)):
            raise DomainError("scores must be finite")
        if not labels.any() or labels.all():
            raise DomainError("need at least one target and one nontarget trial")
        object.__setattr__(self, "scores", scores)
        object.__setattr__(self, "is_target", labels)

    @classmethod
    def build(cls, scores: ArrayLike, is_target: ArrayLike) -> ScoredTrials:
        return cls(np.asarray(scores, dtype=np.float64), np.asarray(is_target, dtype=bool))

    @classmethod
    def join(cls, trials: TrialList, scores: Mapping[tuple[str, str], float]) -> ScoredTrials:
        """Match a score mapping to a trial list by ``(enroll, test)`` key."""

        missing = [trial.key for trial in trials if trial.key not in scores]
        if missing:
            shown = ", ".join(f"{e} {t}" for e, t in missing[:10])
            raise DataFormatError(f"{len(missing)} trial(s) have no score, e.g. {shown}")
        return cls.build([scores[trial.key] for trial in trials], [trial.is_target for trial in trials])

    @property
    def n_target(self) -> int:
        return int(np.count_nonzero(self.is_target))

    @property
    def n_nontarget(self) -> int:
        return int(self.is_target.size - self.n_target)


@dataclass(frozen=True, slots=True)
class DetCurve:
    thresholds: NDArray[np.float64]
    p_fa: NDArray[np.float64]
    p_miss: NDArray[np.float64]

    def points(self) -> list[tuple[float, float]]:
        return [(float(fa), float(miss)) for fa, miss in zip(self.p_fa, self.p_miss, strict=True)]


def det_curve(trials: ScoredTrials) -> DetCurve:
    unique = np.unique(trials.scores)
    bins = np.searchsorted(unique, trials.scores)
    targets = np.bincount(bins[trials.is_target], minlength=unique.size)
    nontargets = np.bincount(bins[~trials.is_target], minlength=unique.size)
    below_target = np.concatenate([[0], np.cumsum(targets)])
    below_nontarget = np.concatenate([[0], np.cumsum(nontargets)])
    return DetCurve(
        thresholds=np.concatenate([unique, [np.inf]]),
        p_fa=1.0 - below_nontarget / trials.n_nontarget,
        p_miss=below_target / trials.n_target,
    )


def det_points(trials: ScoredTrials) -> list[tuple[float, float]]:
    """``(P_fa, P_miss)`` for every threshold, in ascending threshold order."""

    return det_curve(trials).points()


def eer(trials: ScoredTrials) -> tuple[float, float]:
    """Equal error rate and its threshold.

    Interpolates linearly between the two sweep points where ``P_fa − P_miss``
    changes sign.
    """

    curve = det_curve(trials)
    diff = curve.p_fa - curve.p_miss
    j = int(np.argmax(diff <= 0.0))
    if diff[j] == 0.0:
        return float(curve.p_fa[j]), float(curve.thresholds[j])
    i = j - 1
    t = diff[i] / (diff[i] - diff[j])
    rate = curve.p_fa[i] + t * (curve.p_fa[j] - curve.p_fa[i])
    lo, hi = curve.thresholds[i], curve.thresholds[j]
    threshold = lo + t * (hi - lo) if math.isfinite(hi) else lo
    return float(rate), float(threshold)


def _normalizer(params: DcfParams) -> float:
    return min(params.c_miss * params.p_target, params.c_fa * (1.0 - params.p_target))


def _dcf(p_miss: Any, p_fa: Any, params: DcfParams) -> Any:
    cost = params.c_miss * p_miss * params.p_target + params.c_fa * p_fa * (1.0 - params.p_target)
    return cost / _normalizer(params)


def min_dcf(trials: ScoredTrials, params: DcfParams | None = None) -> tuple[float, float]:
    params = params or DcfParams()
    curve = det_curve(trials)
    costs = _dcf(curve.p_miss, curve.p_fa, params)
    best = int(np.argmin(costs))
    return float(costs[best]), float(curve.thresholds[best])


def dcf_at(trials: ScoredTrials, threshold: float, params: DcfParams | None = None) -> float:
    params = params or DcfParams()
    accepted = trials.scores >= threshold
    p_miss = np.count_nonzero(trials.is_target & ~accepted) / trials.n_target
    p_fa = np.count_nonzero(~trials.is_target & accepted) / trials.n_nontarget
    return float(_dcf(p_miss, p_fa, params))


def _finite_or_none(value: float) -> float | None:
    return value if math.isfinite(value) else None


def build_report(trials: ScoredTrials) -> dict[str, Any]:
    rate, threshold = eer(trials)
    report: dict[str, Any] = {"eer": rate, "eer_threshold": _finite_or_none(threshold)}
    for p_target, key in zip(P_TARGETS, ("min_dcf_p01", "min_dcf_p001"), strict=True):
        report[key] = min_dcf(trials, DcfParams(p_target=p_target))[0]
    report["n_target"] = trials.n_target
    report["n_nontarget"] = trials.n_nontarget
    return report


__all__ = [
    "DetCurve",
    "P_TARGETS",
    "ScoredTrials",
    "build_report",
    "dcf_at",
    "det_curve",
    "det_points",
    "eer",
    "min_dcf",
]
