import math

import numpy as np
import pytest
from scipy import stats

from drobounds import (
    INVERSE_S_SEGMENTS,
    AssumptionError,
    InvalidParameterError,
    MahalanobisSpec,
    Method,
    QuantileGrid,
    UnsupportedDistortionError,
    choquet_integral,
    composable_upper_bound,
    linear_aggregation,
    lipschitz_bound,
    mahalanobis_bounds,
    make_es_gamma,
    make_ier_gamma,
    make_piecewise_gamma,
    portfolio_aggregation,
    portfolio_model,
    quadratic,
    quantile_from_samples,
    quartic,
    sample_reference,
    separable_bregman_bounds,
    separable_gap_bound,
    table1_compare,
    wasserstein_bounds,
    worstcase_brute_oracle,
)

# Expected Shortfall of N(0,1) at 0.95 from scipy's closed form.
ES_NORMAL_95 = 2.0627128075074275


@pytest.fixture(scope="module")
def normal_grid():
    return QuantileGrid.from_ppf(stats.norm.ppf, 10_000)


@pytest.fixture(scope="module")
def portfolio():
    return portfolio_aggregation()


class TestLipschitzBound:
    def test_portfolio_decomposition(self):
        assert lipschitz_bound(math.sqrt(13), [1.0, 4.0], 2.0, 4) == pytest.approx(7.728656901081649, abs=1e-12)

    def test_linear_case(self):
        assert lipschitz_bound(0.0, [3.0, 4.0], 2.0, 2) == pytest.approx(5.0)

    def test_a_equal_one(self):
        assert lipschitz_bound(1.0, [3.0, -4.0], 1.0, 3) == pytest.approx(4.0)


class TestWassersteinBounds:
    @pytest.mark.parametrize("eps, upper, lower", [(0.3, 7.348469228349534, 5.531726674375732)])
    def test_es_shifts(self, normal_grid, portfolio, eps, upper, lower):
        gamma = make_es_gamma(0.95)
        rep = wasserstein_bounds(normal_grid, gamma, portfolio, eps)
        assert rep.method is Method.WASSERSTEIN_LIPSCHITZ_I
        assert rep.upper - rep.reference_risk == pytest.approx(upper, abs=1e-9)
        assert rep.lower - rep.reference_risk == pytest.approx(lower, abs=1e-9)

    def test_ier_shifts(self, normal_grid, portfolio):
        rep = wasserstein_bounds(normal_grid, make_ier_gamma(0.75), portfolio, 1.0)
        assert rep.upper - rep.reference_risk == pytest.approx(15.491933384829668, abs=1e-9)
        assert rep.lower - rep.reference_risk == pytest.approx(11.661903789690601, abs=1e-9)

    @pytest.mark.parametrize("eps", [0.1, 1.0, 10.0])
    def test_linear_aggregate_is_tight(self, normal_grid, eps):
        agg = linear_aggregation([1.0, -2.0, 0.5])
        rep = wasserstein_bounds(normal_grid, make_piecewise_gamma(INVERSE_S_SEGMENTS), agg, eps)
        assert rep.lower == pytest.approx(rep.upper, abs=1e-9)

    def test_cases_agree_on_non_decreasing_weight(self, normal_grid, portfolio):
        gamma = make_es_gamma(0.9)
        shift = wasserstein_bounds(normal_grid, gamma, portfolio, 0.7)
        solved = wasserstein_bounds(normal_grid, gamma, portfolio, 0.7, force_isotonic=True)
        assert solved.method is Method.WASSERSTEIN_LIPSCHITZ_II
        assert solved.upper == pytest.approx(shift.upper, abs=1e-8)
        assert solved.lower == pytest.approx(shift.lower, abs=1e-8)

    def test_monotone_in_radius(self, normal_grid, portfolio):
        gamma = make_piecewise_gamma(INVERSE_S_SEGMENTS)
        reps = [wasserstein_bounds(normal_grid, gamma, portfolio, eps) for eps in (0.2, 0.5, 1.0)]
        for a, b in zip(reps, reps[1:]):
            assert a.lower < b.lower and a.upper < b.upper

    def test_zero_radius(self, normal_grid, portfolio):
        rep = wasserstein_bounds(normal_grid, make_es_gamma(0.9), portfolio, 0.0)
        assert rep.lower == rep.upper == rep.reference_risk

    def test_overrides(self, normal_grid, portfolio):
        rep = wasserstein_bounds(normal_grid, make_es_gamma(0.95), portfolio, 1.0, K=10.0)
        assert rep.upper - rep.reference_risk == pytest.approx(10.0 * math.sqrt(20), abs=1e-9)
        with pytest.raises(InvalidParameterError):
            wasserstein_bounds(normal_grid, make_es_gamma(0.95), portfolio, 1.0, K=1.0)

    def test_rejects_other_norms(self, normal_grid):
        with pytest.raises(InvalidParameterError):
            wasserstein_bounds(normal_grid, make_es_gamma(0.9), linear_aggregation([1.0], a=1.0), 1.0)

    def test_unsupported_weight(self, normal_grid, portfolio):
        gamma = make_piecewise_gamma([(0, 0.3, -1), (0.3, 0.7, 2), (0.7, 1, -1)])
        with pytest.raises(UnsupportedDistortionError):
            wasserstein_bounds(normal_grid, gamma, portfolio, 1.0)


class TestMahalanobisBounds:
    def test_linear_scaling_example(self, normal_grid, portfolio):
        rep = mahalanobis_bounds(normal_grid, make_es_gamma(0.95), portfolio, MahalanobisSpec([1, 1, 1, 4]), 1.0,
                                 scaling="linear")
        assert rep.method is Method.MAHALANOBIS_I
        assert rep.upper - rep.reference_risk == pytest.approx(10.466351393921057, abs=1e-9)
        assert rep.lower - rep.reference_risk == pytest.approx(4.5404325926158515, abs=1e-9)

    @pytest.mark.parametrize("segments", [((0.0, 0.95, 0.0), (0.95, 1.0, 20.0)), INVERSE_S_SEGMENTS])
    def test_identity_reproduces_wasserstein(self, normal_grid, portfolio, segments):
        gamma = make_piecewise_gamma(segments)
        delta = 0.6
        maha = mahalanobis_bounds(normal_grid, gamma, portfolio, MahalanobisSpec(np.ones(4)), delta ** 2)
        wass = wasserstein_bounds(normal_grid, gamma, portfolio, delta)
        assert maha.upper == pytest.approx(wass.upper, abs=1e-9)
        assert maha.lower == pytest.approx(wass.lower, abs=1e-9)

    def test_zero_budget(self, normal_grid, portfolio):
        rep = mahalanobis_bounds(normal_grid, make_es_gamma(0.95), portfolio, MahalanobisSpec(np.ones(4)), 0.0)
        assert rep.lower == rep.upper == rep.reference_risk

    def test_errors(self, normal_grid, portfolio):
        with pytest.raises(InvalidParameterError):
            MahalanobisSpec([1.0, 0.0])
        with pytest.raises(InvalidParameterError):
            mahalanobis_bounds(normal_grid, make_es_gamma(0.9), portfolio, MahalanobisSpec([1.0]), 1.0)
        with pytest.raises(InvalidParameterError):
            mahalanobis_bounds(normal_grid, make_es_gamma(0.9), portfolio, MahalanobisSpec(np.ones(4)), 1.0,
                               scaling="cubic")


class TestSeparableBounds:
    def test_two_normal_components(self, normal_grid):
        gamma = make_es_gamma(0.95)
        rep = separable_bregman_bounds([normal_grid, normal_grid], gamma, [quadratic(1.0)] * 2, [1.0, 1.0], 1.0)
        assert rep.upper == pytest.approx(2 * (ES_NORMAL_95 + math.sqrt(20)), abs=5e-3)
        assert rep.lower == pytest.approx(2 * (ES_NORMAL_95 + math.sqrt(10)), abs=5e-3)
        assert len(rep.upper_lambda) == 2

    def test_single_component_is_tight(self, normal_grid):
        rep = separable_bregman_bounds([normal_grid], make_es_gamma(0.9), [quartic()], [2.0], 0.5)
        assert rep.lower == rep.upper

    def test_zero_weights(self, normal_grid):
        rep = separable_bregman_bounds([normal_grid] * 2, make_es_gamma(0.9), [quartic()] * 2, [0.0, 0.0], 0.5)
        assert rep.lower == rep.upper == 0.0

    def test_assumptions(self, normal_grid):
        with pytest.raises(AssumptionError):
            separable_bregman_bounds([normal_grid] * 2, make_es_gamma(0.9), [quartic()] * 2, [1.0, -1.0], 0.5)
        with pytest.raises(AssumptionError):
            separable_bregman_bounds([normal_grid] * 2, make_piecewise_gamma(INVERSE_S_SEGMENTS),
                                     [quartic()] * 2, [1.0, 1.0], 0.5)


class TestSeparableGapBound:
    def test_quadratic_example(self, normal_grid):
        gamma = make_es_gamma(0.95)
        rep = separable_bregman_bounds([normal_grid] * 2, gamma, [quadratic(1.0)] * 2, [1.0, 1.0], 1.0)
        pairs = list(zip(rep.upper_lambda, rep.lower_lambda))
        gap = separable_gap_bound([1.0, 1.0], [0.5, 0.5], pairs, gamma)
        assert gap == pytest.approx((2 - math.sqrt(2)) * math.sqrt(20), abs=1e-9)
        assert rep.upper - rep.lower <= gap + 1e-9

    def test_equal_multipliers(self):
        assert separable_gap_bound([1.0, 2.0], [0.5, 0.5], [(1.0, 1.0), (3.0, 3.0)], make_es_gamma(0.9)) == 0.0

    def test_zero_weights(self):
        assert separable_gap_bound([0.0], [0.5], [(1.0, 2.0)], make_es_gamma(0.9)) == 0.0


class TestComposableUpperBound:
    def test_quadratic_matches_univariate_ball(self, normal_grid):
        gamma = make_es_gamma(0.95)
        assert composable_upper_bound(normal_grid, gamma, quadratic(1.0), 0.25) == pytest.approx(
            choquet_integral(normal_grid, gamma) + 0.5 * math.sqrt(20), abs=1e-12)

    def test_zero_budget(self, normal_grid):
        gamma = make_es_gamma(0.95)
        assert composable_upper_bound(normal_grid, gamma, quartic(), 0.0) == choquet_integral(normal_grid, gamma)

    def test_quartic_portfolio_against_oracle(self):
        cloud = sample_reference(portfolio_model(), 20_000, 7)
        f = quantile_from_samples(portfolio_aggregation().evaluate(cloud.points), 40)
        gamma = make_es_gamma(0.95)
        value = composable_upper_bound(f, gamma, quartic(), 1.0)
        assert value >= choquet_integral(f, gamma)
        oracle = worstcase_brute_oracle(f, gamma, quartic(), 1.0)
        assert value == pytest.approx(oracle, abs=5e-3 * (1 + abs(value)))


class TestTable1:
    def test_two_factor_example(self, normal_grid):
        gamma = make_es_gamma(0.95)
        agg = linear_aggregation([1.0, 1.0])
        f_agg = QuantileGrid(math.sqrt(2) * normal_grid.values)
        rep = table1_compare(agg, gamma, [normal_grid, normal_grid], f_agg, 0.5)
        t = rep.as_dict()
        ref = rep.reference_risk
        assert t["wasserstein_direct_upper"] - ref == pytest.approx(math.sqrt(2) * math.sqrt(20) * 0.5, abs=1e-9)
        assert t["wasserstein_separable_upper"] - ref == pytest.approx(2 * math.sqrt(20) * 0.5, abs=1e-9)
        assert t["wasserstein_separable_lower"] <= t["wasserstein_direct_lower"]

    def test_one_factor_rows_coincide(self, normal_grid):
        agg = linear_aggregation([1.5])
        rep = table1_compare(agg, make_es_gamma(0.9), [normal_grid], QuantileGrid(1.5 * normal_grid.values), 0.8)
        t = rep.as_dict()
        keys = ["wasserstein_direct_lower", "wasserstein_direct_upper",
                "wasserstein_separable_lower", "wasserstein_separable_upper"]
        np.testing.assert_allclose([t[k] for k in keys], t[keys[0]], atol=1e-9)

    def test_identity_mahalanobis_rows(self, normal_grid):
        agg = linear_aggregation([1.0, 2.0])
        rep = table1_compare(agg, make_es_gamma(0.9), [normal_grid] * 2, QuantileGrid(3 * normal_grid.values), 0.4,
                             MahalanobisSpec([1.0, 1.0]))
        t = rep.as_dict()
        assert t["mahalanobis_direct_upper"] == pytest.approx(t["wasserstein_direct_upper"], abs=1e-9)
        assert t["mahalanobis_direct_lower"] == pytest.approx(t["wasserstein_direct_lower"], abs=1e-9)

    def test_requires_non_negative_weights(self, normal_grid):
        with pytest.raises(AssumptionError):
            table1_compare(linear_aggregation([1.0, -1.0]), make_es_gamma(0.9), [normal_grid] * 2, normal_grid, 0.5)
