"""Pearson correlation and lead/lag search between monthly series."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from ..errors import PipelineError
from .series import TimeSeries


class CorrelationError(PipelineError):
    pass


class ZeroVarianceError(CorrelationError):
    pass


def pearson(x, y) -> float:
    x = np.asarray(x, dtype=float)
    y = np.asarray(y, dtype=float)
    if x.shape != y.shape or x.ndim != 1:
        raise CorrelationError(f"need equal-length 1-d inputs, got {x.shape} and {y.shape}")
    if len(x) < 2:
        raise CorrelationError(f"need at least 2 observations, got {len(x)}")
    dx = x - x.mean()
    dy = y - y.mean()
    sx = float(np.sqrt(dx @ dx))
    sy = float(np.sqrt(dy @ dy))
    if sx == 0.0 or sy == 0.0:
        raise ZeroVarianceError("constant input has no defined correlation")
    return float((dx @ dy) / (sx * sy))


@dataclass(frozen=True)
class LagCorrelationResult:
    a_name: str
    b_name: str
    per_lag: dict[int, float]
    n_overlap: dict[int, int]
    best_lag: int
    best_r: float


def select_best_lag(per_lag: dict[int, float]) -> int:
    """Highest r wins; ties prefer the smaller |lag|, then the leading (+) one."""
    if not per_lag:
        raise CorrelationError("no lags to choose from")
    return max(per_lag, key=lambda k: (per_lag[k], -abs(k), k))


def lagged_correlation(
    a: TimeSeries,
    b: TimeSeries,
    lag_min: int,
    lag_max: int,
    min_overlap: int = 24,
) -> LagCorrelationResult:
    """r(k) = Pearson(a_t, b_{t+k}); positive k means `a` leads `b`.

    Lags whose overlap falls below min_overlap are skipped. Best lag is the
    maximum r; ties prefer the smaller |k|, then the positive (leading) k.
    """
    if lag_min > lag_max:
        raise CorrelationError(f"lag_min {lag_min} exceeds lag_max {lag_max}")
    if min_overlap < 2:
        raise CorrelationError(f"min_overlap must be >= 2, got {min_overlap}")
    b_values = b.by_index()
    per_lag: dict[int, float] = {}
    n_overlap: dict[int, int] = {}
    for k in range(lag_min, lag_max + 1):
        xs = []
        ys = []
        for m, v in a.points:
            w = b_values.get(m.index + k)
            if w is not None:
                xs.append(v)
                ys.append(w)
        n_overlap[k] = len(xs)
        if len(xs) < min_overlap:
            continue
        per_lag[k] = pearson(xs, ys)
    if not per_lag:
        raise CorrelationError(
            f"no lag in [{lag_min}, {lag_max}] has at least {min_overlap} overlapping months"
        )
    best_lag = select_best_lag(per_lag)
    return LagCorrelationResult(
        a_name=a.name,
        b_name=b.name,
        per_lag=per_lag,
        n_overlap=n_overlap,
        best_lag=best_lag,
        best_r=per_lag[best_lag],
    )
