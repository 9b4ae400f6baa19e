import math

import numpy as np
import pytest
from scipy.integrate import quad

from dose.errors import (
    DegenerateStatistic,
    DimensionMismatch,
    NonPositiveBandwidth,
)
from dose.kde import (
    dose_kde_score,
    fit_kde,
    kde_from_dict,
    kde_log_density,
    kde_to_dict,
    log_density,
)
from dose.stat_tables import StatSchema, StatTable

LOG_PHI_0 = -0.5 * math.log(2 * math.pi)  # -0.9189385332046727


def table(values, stats=None):
    values = np.asarray(values, dtype=float)
    if values.ndim == 1:
        values = values[:, None]
    stats = stats or tuple(f"s{i}" for i in range(values.shape[1]))
    ids = tuple(f"r{i}" for i in range(values.shape[0]))
    return StatTable(StatSchema(stats), "train", ids, values)


class TestBandwidthRules:
    def test_scott_two_points(self):
        kde = fit_kde(table([0.0, 2.0]), "scott")
        assert kde.bandwidths[0] == pytest.approx(math.sqrt(2) * 2 ** (-0.2), abs=1e-12)

    def test_silverman_uses_min_of_sigma_and_iqr(self):
        values = np.array([0.0, 1.0, 2.0, 3.0, 4.0, 100.0])
        kde = fit_kde(table(values), "silverman")
        sigma = np.std(values, ddof=1)
        iqr = np.percentile(values, 75) - np.percentile(values, 25)
        expected = 0.9 * min(sigma, iqr / 1.34) * len(values) ** (-0.2)
        assert kde.bandwidths[0] == pytest.approx(expected, rel=1e-12)

    def test_fixed_ignores_data(self):
        kde = fit_kde(table([0.0, 100.0]), [1.0])
        assert kde.bandwidths[0] == 1.0

    def test_constant_column_degenerate(self):
        with pytest.raises(DegenerateStatistic):
            fit_kde(table([3.0, 3.0, 3.0]), "scott")

    def test_fixed_nonpositive_rejected(self):
        with pytest.raises(NonPositiveBandwidth):
            fit_kde(table([0.0, 1.0]), [0.0])

    def test_fixed_wrong_length(self):
        with pytest.raises(DimensionMismatch):
            fit_kde(table([[0.0, 1.0], [1.0, 2.0]]), [1.0])


class TestLogDensity:
    def test_single_training_point(self):
        kde = fit_kde(table([0.0, 1.0]), [1.0])
        # kernel average over {0, 1} evaluated at 0: (phi(0) + phi(1)) / 2
        expected = math.log(0.5 * (math.exp(LOG_PHI_0) + math.exp(LOG_PHI_0 - 0.5)))
        assert kde_log_density(kde, [0.0]) == pytest.approx(expected, abs=1e-12)

    def test_symmetric_pair_at_midpoint(self):
        kde = fit_kde(table([-1.0, 1.0]), [1.0])
        assert kde_log_density(kde, [0.0]) == pytest.approx(LOG_PHI_0 - 0.5, abs=1e-12)

    def test_product_of_experts_sums_dimensions(self):
        kde1 = fit_kde(table([-1.0, 1.0]), [1.0])
        kde2 = fit_kde(table(np.array([[-1.0, -1.0], [1.0, 1.0]])), [1.0, 1.0])
        one = kde_log_density(kde1, [0.0])
        assert kde_log_density(kde2, [0.0, 0.0]) == pytest.approx(2 * one, abs=1e-12)

    def test_dimension_mismatch(self):
        kde = fit_kde(table([-1.0, 1.0]), [1.0])
        with pytest.raises(DimensionMismatch):
            kde_log_density(kde, [0.0, 1.0])

    def test_far_tail_is_finite_and_matches_dominant_term(self):
        kde = fit_kde(table([0.0, 1.0]), [1.0])
        x = 60.0
        value = kde_log_density(kde, [x])
        assert np.isfinite(value)
        # nearest point dominates: log phi(z_min) - log(n h)
        dominant = -0.5 * (x - 1.0) ** 2 + LOG_PHI_0 - math.log(2.0)
        assert value == pytest.approx(dominant, rel=1e-12)

    def test_normalization_by_quadrature(self):
        rng = np.random.default_rng(5)
        values = rng.normal(size=40)
        kde = fit_kde(table(values), "scott")
        h = kde.bandwidths[0]
        lo, hi = values.min() - 10 * h, values.max() + 10 * h
        mass, _ = quad(lambda u: math.exp(kde_log_density(kde, [u])), lo, hi, limit=200)
        assert abs(mass - 1.0) < 1e-6

    def test_permutation_invariance(self):
        rng = np.random.default_rng(6)
        values = rng.normal(size=25)
        a = fit_kde(table(values), "scott")
        b = fit_kde(table(rng.permutation(values)), "scott")
        grid = np.linspace(-3, 3, 7)[:, None]
        assert np.allclose(log_density(a, grid), log_density(b, grid), atol=1e-12)

    def test_monotone_tail(self):
        rng = np.random.default_rng(7)
        values = rng.normal(size=30)
        kde = fit_kde(table(values), "scott")
        start = values.max() + kde.bandwidths[0]
        grid = np.linspace(start, start + 20, 100)[:, None]
        tail = log_density(kde, grid)
        assert np.all(np.diff(tail) < 0)


class TestDoseKdeScore:
    def test_training_table_outscores_shifted_points(self):
        rng = np.random.default_rng(8)
        values = rng.normal(size=(200, 2)) * [1.0, 3.0]
        t = table(values, stats=("a", "b"))
        kde = fit_kde(t, "scott")
        shift = 10 * np.std(values, axis=0, ddof=1)
        shifted = table(values + shift, stats=("a", "b"))
        base = dose_kde_score(kde, t).scores.mean()
        far = dose_kde_score(kde, shifted).scores.mean()
        assert np.isfinite(base) and base > far

    def test_single_statistic_equals_log_density(self):
        values = np.linspace(-1, 1, 9)
        t = table(values)
        kde = fit_kde(t, "scott")
        scores = dose_kde_score(kde, t).scores
        assert np.allclose(scores, log_density(kde, values[:, None]), atol=1e-12)

    def test_constant_score_statistic_shifts_all_rows_equally(self):
        rng = np.random.default_rng(9)
        values = rng.normal(size=(50, 1))
        t1 = table(values, stats=("a",))
        kde1 = fit_kde(t1, "scott")
        s1 = dose_kde_score(kde1, t1).scores
        # append a second statistic evaluated only at its own training value,
        # where its KDE log-density is the constant log phi(0) - log h
        extra = np.full((50, 1), 2.0)
        t2 = table(np.hstack([values, extra]), stats=("a", "b"))
        kde2 = fit_kde(t2, [kde1.bandwidths[0], 1.0])
        s2 = dose_kde_score(kde2, t2).scores
        shift = s2 - s1
        assert np.allclose(shift, shift[0], atol=1e-12)
        assert shift[0] == pytest.approx(LOG_PHI_0, abs=1e-12)

    def test_orientation_and_method(self):
        t = table([0.0, 1.0])
        sv = dose_kde_score(fit_kde(t, "scott"), t)
        assert sv.method == "dose_kde"
        assert sv.orientation == "higher_is_in"

    def test_column_name_mismatch(self):
        t = table([0.0, 1.0], stats=("a",))
        kde = fit_kde(t, "scott")
        with pytest.raises(DimensionMismatch):
            dose_kde_score(kde, table([0.0, 1.0], stats=("b",)))


def test_serialization_roundtrip_exact():
    rng = np.random.default_rng(10)
    t = table(rng.normal(size=(20, 3)) * [1e-9, 1.0, 1e7], stats=("x", "y", "z"))
    kde = fit_kde(t, "scott")
    back = kde_from_dict(kde_to_dict(kde))
    assert back.statistic_names == kde.statistic_names
    assert back.bandwidths.tobytes() == kde.bandwidths.tobytes()
    assert back.train_values.tobytes() == kde.train_values.tobytes()
