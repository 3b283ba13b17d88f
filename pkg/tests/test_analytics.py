import math
import random

import mpmath as mp
import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from psi_pipeline.analytics import (
    f_sf,
    granger_test,
    lagged_correlation,
    load_series_csv,
    pearson,
    regularized_incomplete_beta,
    transform_series,
    weighted_f1,
)
from psi_pipeline.analytics.correlation import CorrelationError, ZeroVarianceError
from psi_pipeline.analytics.evaluation import EvaluationError
from psi_pipeline.analytics.fdist import NumericError
from psi_pipeline.analytics.granger import (
    InsufficientObservationsError,
    SingularDesignError,
)
from psi_pipeline.analytics.series import SeriesError, TimeSeries
from psi_pipeline.months import Month

START = Month(2000, 1)


def make_series(name, values, start=START, skip=()):
    pairs = [
        (start.plus(t), float(v)) for t, v in enumerate(values) if t not in skip
    ]
    return TimeSeries(name, tuple(pairs))


# ---------------------------------------------------------------------------
# weighted F1


def f1_by_counting(gold, pred):
    """Independent recomputation straight from per-label tallies."""
    total = 0.0
    for label in set(gold):
        tp = sum(1 for g, p in zip(gold, pred) if g == label and p == label)
        fp = sum(1 for g, p in zip(gold, pred) if g != label and p == label)
        fn = sum(1 for g, p in zip(gold, pred) if g == label and p != label)
        prec = tp / (tp + fp) if tp + fp else 0.0
        rec = tp / (tp + fn) if tp + fn else 0.0
        f1 = 2 * prec * rec / (prec + rec) if prec + rec else 0.0
        total += gold.count(label) / len(gold) * f1
    return total


class TestWeightedF1:
    def test_perfect_predictions(self):
        assert weighted_f1(["A", "B", "A"], ["A", "B", "A"]).weighted_f1 == 1.0

    def test_two_thirds_case(self):
        report = weighted_f1(["A", "A", "B"], ["A", "B", "B"])
        assert report.weighted_f1 == pytest.approx(2 / 3, abs=1e-12)
        assert report.f1["A"] == pytest.approx(2 / 3, abs=1e-12)
        assert report.f1["B"] == pytest.approx(2 / 3, abs=1e-12)
        assert report.support == {"A": 2, "B": 1}

    def test_single_class_all_wrong_below_half(self):
        report = weighted_f1(["A", "A", "B"], ["B", "B", "B"])
        # A: f1 0; B: P=1/3, R=1 -> f1 1/2; weighted = 1/3 * 1/2
        assert report.weighted_f1 == pytest.approx(1 / 6, abs=1e-12)
        assert report.weighted_f1 < 0.5

    def test_confusion_rows_sum_to_support(self):
        gold = ["A", "B", "A", "C", "B"]
        pred = ["B", "B", "A", "A", "C"]
        report = weighted_f1(gold, pred)
        for label in report.labels:
            assert sum(report.confusion[label].values()) == report.support[label]

    def test_length_mismatch(self):
        with pytest.raises(EvaluationError):
            weighted_f1(["A"], ["A", "B"])

    def test_matches_independent_recomputation(self):
        rng = random.Random(31)
        for _ in range(200):
            labels = [f"L{i}" for i in range(rng.randint(2, 5))]
            n = rng.randint(1, 60)
            gold = [rng.choice(labels) for _ in range(n)]
            pred = [rng.choice(labels) for _ in range(n)]
            assert weighted_f1(gold, pred).weighted_f1 == pytest.approx(
                f1_by_counting(gold, pred), abs=1e-12
            )

    @given(st.lists(st.sampled_from("ABC"), min_size=1, max_size=30), st.permutations("ABC"))
    def test_relabeling_invariance(self, gold, perm):
        rng = random.Random(7)
        pred = [rng.choice("ABC") for _ in gold]
        table = dict(zip("ABC", perm))
        renamed = weighted_f1([table[g] for g in gold], [table[p] for p in pred])
        assert renamed.weighted_f1 == pytest.approx(
            weighted_f1(gold, pred).weighted_f1, abs=1e-12
        )


# ---------------------------------------------------------------------------
# series transforms


class TestTransformSeries:
    def test_level_is_identity(self):
        s = make_series("s", [1.0, 2.0, 3.0])
        assert transform_series(s, "level") is s

    def test_constant_yoy_is_zero(self):
        s = make_series("s", [5.0] * 30)
        out = transform_series(s, "yoy_pct")
        assert len(out) == 18
        assert all(v == 0.0 for _, v in out.points)

    def test_yoy_arithmetic(self):
        values = [100.0] * 12 + [103.0]
        out = transform_series(make_series("s", values), "yoy_pct")
        assert out.points[-1][1] == pytest.approx(3.0, abs=1e-12)

    def test_mom_base(self):
        out = transform_series(make_series("s", [50.0, 51.0]), "mom_pct")
        assert len(out) == 1
        assert out.points[0][1] == pytest.approx(2.0, abs=1e-12)

    def test_gap_omits_undefined_points(self):
        s = make_series("s", range(10, 40), skip={14})
        out = transform_series(s, "yoy_pct")
        # t=26 lacks its t-12 base (14 was dropped), and so does t=14 itself.
        out_months = {m for m, _ in out.points}
        assert START.plus(26) not in out_months
        assert START.plus(14) not in out_months
        assert START.plus(15) in out_months

    def test_zero_base_is_an_error(self):
        with pytest.raises(SeriesError, match="zero base"):
            transform_series(make_series("s", [0.0, 1.0]), "mom_pct")

    def test_unknown_mode(self):
        with pytest.raises(SeriesError):
            transform_series(make_series("s", [1.0, 2.0]), "qoq")


class TestTimeSeries:
    def test_duplicate_month_in_csv_names_month(self, tmp_path):
        path = tmp_path / "ref.csv"
        path.write_text("month,value\n2020-01,1.0\n2020-01,2.0\n", encoding="utf-8")
        with pytest.raises(SeriesError, match="2020-01"):
            load_series_csv(path)

    def test_csv_round_trip_order(self, tmp_path):
        path = tmp_path / "ref.csv"
        path.write_text("month,value\n2020-02,2.5\n2020-01,1.5\n", encoding="utf-8")
        series = load_series_csv(path, "ref")
        assert [str(m) for m, _ in series.points] == ["2020-01", "2020-02"]

    def test_non_finite_rejected(self):
        with pytest.raises(SeriesError):
            TimeSeries("s", ((START, float("nan")),))


# ---------------------------------------------------------------------------
# correlation


class TestPearson:
    def test_affine_is_one(self):
        x = [1.0, 2.0, 3.0, 4.0]
        assert pearson(x, [2 * v + 1 for v in x]) == pytest.approx(1.0, abs=1e-12)

    def test_negation_is_minus_one(self):
        x = [1.0, 5.0, 2.0]
        assert pearson(x, [-v for v in x]) == pytest.approx(-1.0, abs=1e-12)

    def test_hand_computed_half(self):
        assert pearson([1, 2, 3], [2, 1, 3]) == pytest.approx(0.5, abs=1e-12)

    def test_zero_variance(self):
        with pytest.raises(ZeroVarianceError):
            pearson([1.0, 1.0, 1.0], [1.0, 2.0, 3.0])

    def test_too_short(self):
        with pytest.raises(CorrelationError):
            pearson([1.0], [2.0])

    @given(
        st.lists(st.integers(-100, 100), min_size=3, max_size=20).map(
            lambda xs: [float(x) for x in xs]
        ),
        st.floats(0.1, 10),
        st.floats(-5, 5),
    )
    def test_affine_invariance(self, xs, scale, shift):
        seeded = random.Random(5)
        ys = [seeded.uniform(-1, 1) for _ in xs]
        if len(set(xs)) < 2 or len(set(ys)) < 2:
            return
        base = pearson(xs, ys)
        moved = pearson([scale * v + shift for v in xs], ys)
        assert moved == pytest.approx(base, abs=1e-9)
        assert pearson([-v for v in xs], ys) == pytest.approx(-base, abs=1e-9)


class TestLaggedCorrelation:
    def trending(self, n=120, seed=3):
        rng = random.Random(seed)
        return [0.02 * t + math.sin(2 * math.pi * t / 24.0) + rng.gauss(0, 0.05) for t in range(n)]

    def test_identical_series_best_lag_zero(self):
        a = make_series("a", self.trending())
        result = lagged_correlation(a, a, -6, 6, min_overlap=24)
        assert result.best_lag == 0
        assert result.best_r == pytest.approx(1.0, abs=1e-12)

    def test_three_month_shift_recovered(self):
        values = self.trending()
        a = make_series("a", values)
        b = TimeSeries("b", tuple((m.plus(3), v) for m, v in a.points))
        result = lagged_correlation(a, b, 0, 6, min_overlap=24)
        assert result.best_lag == 3
        assert result.best_r >= 0.999

    def test_sign_flip_at_lag_zero(self):
        values = self.trending()
        a = make_series("a", values)
        b = make_series("b", [-v for v in values])
        result = lagged_correlation(a, b, 0, 0, min_overlap=24)
        assert result.per_lag[0] == pytest.approx(-1.0, abs=1e-12)

    def test_min_overlap_excludes_short_windows(self):
        a = make_series("a", self.trending(40))
        b = make_series("b", self.trending(40, seed=9))
        result = lagged_correlation(a, b, 0, 30, min_overlap=24)
        assert 20 not in result.per_lag  # overlap 20 < 24
        assert result.n_overlap[20] == 20
        assert 16 in result.per_lag

    def test_no_lag_with_enough_overlap(self):
        a = make_series("a", self.trending(10))
        b = make_series("b", self.trending(10, seed=9))
        with pytest.raises(CorrelationError, match="overlap"):
            lagged_correlation(a, b, 0, 3, min_overlap=24)

    def test_tie_break_rule(self):
        from psi_pipeline.analytics.correlation import select_best_lag

        assert select_best_lag({-3: 0.8, 3: 0.8, 5: 0.9}) == 5
        assert select_best_lag({-3: 0.8, 3: 0.8}) == 3  # positive wins at equal |k|
        assert select_best_lag({0: 0.5, 1: 0.5, -1: 0.5}) == 0
        assert select_best_lag({-2: 0.7, 4: 0.7}) == -2  # smaller |k| beats sign

    def test_exact_tie_resolved_toward_zero_lag(self):
        # A linear series against a longer linear extension has bit-identical
        # windows at every lag, so all lags tie exactly and 0 must win.
        a = make_series("a", [2.0 * t for t in range(60)])
        b = TimeSeries(
            "b", tuple((START.plus(t - 6), 2.0 * t) for t in range(72))
        )
        result = lagged_correlation(a, b, -6, 6, min_overlap=24)
        assert len({round(r, 15) for r in result.per_lag.values()}) == 1
        assert result.best_lag == 0

    def test_symmetry_under_argument_swap(self):
        rng = random.Random(17)
        for _ in range(30):
            n = rng.randint(30, 60)
            skip_a = {rng.randrange(n) for _ in range(3)}
            skip_b = {rng.randrange(n) for _ in range(3)}
            a = make_series("a", [rng.gauss(0, 1) for _ in range(n)], skip=skip_a)
            b = make_series("b", [rng.gauss(0, 1) for _ in range(n)], skip=skip_b)
            ab = lagged_correlation(a, b, -4, 4, min_overlap=10)
            ba = lagged_correlation(b, a, -4, 4, min_overlap=10)
            for k, r in ab.per_lag.items():
                assert ba.per_lag[-k] == pytest.approx(r, abs=1e-10)


# ---------------------------------------------------------------------------
# Granger causality


def granger_f_by_normal_equations(cause_values, effect_values, lag):
    """Restricted/unrestricted OLS solved via (X'X)b = X'y on plain arrays."""
    c = np.asarray(cause_values, dtype=float)
    e = np.asarray(effect_values, dtype=float)
    y = e[lag:]
    own = np.column_stack([e[lag - i : len(e) - i] for i in range(1, lag + 1)])
    other = np.column_stack([c[lag - i : len(c) - i] for i in range(1, lag + 1)])
    ones = np.ones((len(y), 1))

    def ssr(X):
        beta = np.linalg.solve(X.T @ X, X.T @ y)
        resid = y - X @ beta
        return float(resid @ resid)

    ssr_r = ssr(np.hstack([ones, own]))
    ssr_u = ssr(np.hstack([ones, own, other]))
    n = len(y)
    return ((ssr_r - ssr_u) / lag) / (ssr_u / (n - 2 * lag - 1))


def simulate_causal(n=200, seed=12345):
    rng = np.random.default_rng(seed)
    x = rng.standard_normal(n)
    eps = rng.standard_normal(n)
    y = np.zeros(n)
    for t in range(n):
        y[t] = (0.9 * x[t - 3] if t >= 3 else 0.0) + 0.3 * eps[t]
    return x, y


class TestGranger:
    def test_lagged_dependence_detected(self):
        x, y = simulate_causal()
        result = granger_test(make_series("x", x), make_series("y", y), 12)
        assert result.p_value < 0.01
        assert result.n_effective == 188

    def test_independent_noise_not_detected(self):
        rng = np.random.default_rng(8)
        a = rng.standard_normal(200)
        b = rng.standard_normal(200)
        result = granger_test(make_series("a", a), make_series("b", b), 12)
        assert result.p_value > 0.05

    def test_pure_autoregression_gives_tiny_f(self):
        rng = np.random.default_rng(7)
        n = 200
        eps = rng.standard_normal(n)
        e = np.zeros(n)
        for t in range(1, n):
            e[t] = 0.9 * e[t - 1] + eps[t]
        c = rng.standard_normal(n)
        result = granger_test(make_series("c", c), make_series("e", e), 3)
        assert result.f_value < 0.5
        assert result.p_value > 0.5

    def test_matches_normal_equations_oracle(self):
        x, y = simulate_causal()
        for lag in (1, 3, 12):
            result = granger_test(make_series("x", x), make_series("y", y), lag)
            expected = granger_f_by_normal_equations(x, y, lag)
            assert result.f_value == pytest.approx(expected, rel=1e-8)

    def test_rescaling_both_series_leaves_f(self):
        x, y = simulate_causal()
        base = granger_test(make_series("x", x), make_series("y", y), 6)
        scaled = granger_test(make_series("x", 1e3 * x), make_series("y", 1e3 * y), 6)
        assert scaled.f_value == pytest.approx(base.f_value, rel=1e-9)

    def test_insufficient_observations(self):
        rng = np.random.default_rng(2)
        values = rng.standard_normal(20)
        with pytest.raises(InsufficientObservationsError):
            granger_test(make_series("a", values), make_series("b", values + 1.0), 12)

    def test_collinear_design_reported(self):
        rng = np.random.default_rng(3)
        values = rng.standard_normal(60)
        a = make_series("a", values)
        b = make_series("b", values)  # cause lags duplicate effect lags exactly
        with pytest.raises(SingularDesignError):
            granger_test(a, b, 2)

    def test_gaps_reduce_effective_rows(self):
        rng = np.random.default_rng(4)
        values = rng.standard_normal(30)
        a = make_series("a", rng.standard_normal(30), skip={9})
        b = make_series("b", values, skip={9})
        result = granger_test(a, b, 2)
        # Months 9 is missing: t=9 has no value, t=10 and t=11 lack lags.
        assert result.n_effective == 30 - 2 - 3

    def test_p_decreases_as_f_increases(self):
        ps = [f_sf(f, 12, 150) for f in (0.5, 1.0, 2.0, 4.0, 8.0)]
        assert ps == sorted(ps, reverse=True)


# ---------------------------------------------------------------------------
# F-distribution tail


def betainc_by_series(a, b, x, dps=60):
    """Regularized incomplete beta via ascending-series summation (mpmath)."""
    with mp.workdps(dps):
        a, b, x = mp.mpf(a), mp.mpf(b), mp.mpf(x)
        if x == 0:
            return mp.mpf(0)
        if x == 1:
            return mp.mpf(1)
        if x > (a + 1) / (a + b + 2):
            return mp.mpf(1) - betainc_by_series(float(b), float(a), float(1 - x), dps)
        front = mp.exp(a * mp.log(x) + b * mp.log(1 - x) - mp.log(a) - mp.log(mp.beta(a, b)))
        term = mp.mpf(1)
        total = mp.mpf(1)
        n = 0
        while True:
            n += 1
            term *= (a + b + n - 1) / (a + n) * x
            total += term
            if term < total * mp.mpf(10) ** (-dps + 5):
                break
            if n > 200000:
                raise RuntimeError("series did not converge")
        return front * total


F_SPOT_CHECKS = [
    (0.5, 1, 1),
    (1.0, 1, 10),
    (2.5, 3, 7),
    (0.9, 24, 24),
    (1.7, 12, 163),
    (2.3, 12, 163),
    (5.0, 2, 20),
    (10.0, 6, 30),
    (0.1, 12, 24),
    (42.616, 12, 250),
    (0.012, 12, 250),
    (100.0, 12, 50),
]


class TestFDistribution:
    @pytest.mark.parametrize("f,d1,d2", F_SPOT_CHECKS)
    def test_tail_matches_series_oracle(self, f, d1, d2):
        x = d2 / (d2 + d1 * f)
        oracle = float(betainc_by_series(d2 / 2.0, d1 / 2.0, x))
        assert f_sf(f, d1, d2) == pytest.approx(oracle, rel=1e-8)

    def test_edges(self):
        assert f_sf(0.0, 3, 9) == 1.0
        assert regularized_incomplete_beta(2.0, 3.0, 0.0) == 0.0
        assert regularized_incomplete_beta(2.0, 3.0, 1.0) == 1.0

    def test_complement_consistency(self):
        for a, b, x in [(2.5, 3.5, 0.3), (6.0, 81.5, 0.62), (0.5, 0.5, 0.1)]:
            total = regularized_incomplete_beta(a, b, x) + regularized_incomplete_beta(b, a, 1 - x)
            assert total == pytest.approx(1.0, abs=1e-12)

    def test_invalid_arguments(self):
        with pytest.raises(NumericError):
            f_sf(-1.0, 2, 3)
        with pytest.raises(NumericError):
            f_sf(1.0, 0, 3)
        with pytest.raises(NumericError):
            regularized_incomplete_beta(1.0, 1.0, 1.5)
