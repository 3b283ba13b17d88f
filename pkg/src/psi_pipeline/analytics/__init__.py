"""Evaluation statistics: weighted F1, series transforms, lead/lag
correlation, and bivariate Granger causality."""

from .correlation import LagCorrelationResult, lagged_correlation, pearson
from .evaluation import EvalReport, weighted_f1
from .fdist import f_sf, regularized_incomplete_beta
from .granger import GrangerResult, granger_test
from .series import TimeSeries, load_series_csv, transform_series

__all__ = [
    "EvalReport",
    "GrangerResult",
    "LagCorrelationResult",
    "TimeSeries",
    "f_sf",
    "granger_test",
    "lagged_correlation",
    "load_series_csv",
    "pearson",
    "regularized_incomplete_beta",
    "transform_series",
    "weighted_f1",
]
