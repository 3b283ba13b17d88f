"""Bivariate Granger causality via restricted/unrestricted OLS and an F-test.

The unrestricted model regresses the effect on a constant, its own lags
1..L, and the cause's lags 1..L; the restricted model drops the cause
lags. Designs with 2L+1 columns on short samples are poorly conditioned,
so the solve goes through a column-pivoting orthogonal factorization
(LAPACK gelsy) rather than normal equations.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.linalg import lstsq

from ..errors import PipelineError
from .fdist import f_sf
from .series import TimeSeries


class GrangerError(PipelineError):
    pass


class InsufficientObservationsError(GrangerError):
    pass


class SingularDesignError(GrangerError):
    pass


@dataclass(frozen=True)
class GrangerResult:
    cause_name: str
    effect_name: str
    lag: int
    f_value: float
    p_value: float
    n_effective: int


def _lagged_rows(cause: TimeSeries, effect: TimeSeries, lag: int):
    """Rows (y_t, effect lags 1..L, cause lags 1..L) for every usable month."""
    cause_values = cause.by_index()
    effect_values = effect.by_index()
    y = []
    effect_lags = []
    cause_lags = []
    for m, v in effect.points:
        e_row = [effect_values.get(m.index - i) for i in range(1, lag + 1)]
        c_row = [cause_values.get(m.index - i) for i in range(1, lag + 1)]
        if any(x is None for x in e_row) or any(x is None for x in c_row):
            continue
        y.append(v)
        effect_lags.append(e_row)
        cause_lags.append(c_row)
    return np.array(y), np.array(effect_lags), np.array(cause_lags)


def _ssr(X: np.ndarray, y: np.ndarray) -> float:
    beta, _, rank, _ = lstsq(X, y, lapack_driver="gelsy")
    if rank < X.shape[1]:
        raise SingularDesignError(
            f"design matrix is rank deficient ({rank} < {X.shape[1]} columns)"
        )
    resid = y - X @ beta
    return float(resid @ resid)


def granger_test(cause: TimeSeries, effect: TimeSeries, max_lag: int) -> GrangerResult:
    """Test the null hypothesis that `cause` does not Granger-cause `effect`.

    The lag order is imposed, not selected: all lags 1..max_lag enter both
    models.
    """
    if max_lag < 1:
        raise GrangerError(f"max_lag must be >= 1, got {max_lag}")
    y, effect_lags, cause_lags = _lagged_rows(cause, effect, max_lag)
    n = len(y)
    if n <= 2 * max_lag + 2:
        raise InsufficientObservationsError(
            f"need more than {2 * max_lag + 2} usable observations, got {n}"
        )
    const = np.ones((n, 1))
    restricted = np.hstack([const, effect_lags])
    unrestricted = np.hstack([const, effect_lags, cause_lags])

    ssr_r = _ssr(restricted, y)
    ssr_u = _ssr(unrestricted, y)
    if ssr_u <= 0.0:
        raise SingularDesignError("unrestricted model fits exactly; F statistic undefined")

    df_denom = n - 2 * max_lag - 1
    f_value = max(((ssr_r - ssr_u) / max_lag) / (ssr_u / df_denom), 0.0)
    p_value = f_sf(f_value, max_lag, df_denom)
    return GrangerResult(
        cause_name=cause.name,
        effect_name=effect.name,
        lag=max_lag,
        f_value=f_value,
        p_value=p_value,
        n_effective=n,
    )
