import math

import numpy as np
import pytest

from drobounds import (
    CapacityError,
    DiscreteCloud,
    InvalidParameterError,
    MahalanobisDiag,
    NormPower,
    QuantileGrid,
    SeparableBregman,
    bregman_wasserstein_1d,
    discrete_ot_oracle,
    quadratic,
    quantile_from_samples,
    quartic,
    wasserstein_1d,
)
from drobounds.verify import coranked, separable_gap


def _grid(values):
    return QuantileGrid(np.asarray(values, dtype=float))


class TestWasserstein1d:
    def test_identity_and_shift(self):
        f = _grid(np.linspace(-1, 1, 20))
        assert wasserstein_1d(f, f) == 0.0
        for p in (1.0, 2.0, 3.5):
            assert wasserstein_1d(f.shifted(0.7), f, p) == pytest.approx(0.7, abs=1e-12)

    def test_two_point_laws(self):
        assert wasserstein_1d(_grid([0, 2]), _grid([1, 5])) == pytest.approx(math.sqrt(5), abs=1e-12)

    def test_resolution_mismatch(self):
        with pytest.raises(InvalidParameterError):
            wasserstein_1d(_grid([0, 1]), _grid([0, 1, 2]))

    def test_triangle_inequality(self):
        rng = np.random.default_rng(0)
        for _ in range(50):
            f, g, h = (_grid(np.sort(rng.normal(size=30))) for _ in range(3))
            assert wasserstein_1d(f, h) <= wasserstein_1d(f, g) + wasserstein_1d(g, h) + 1e-12


class TestBregmanWasserstein1d:
    def test_quadratic_is_squared_wasserstein(self):
        f = _grid(np.linspace(0, 3, 12))
        assert bregman_wasserstein_1d(f.shifted(0.4), f, quadratic(1.0)) == pytest.approx(0.16, abs=1e-14)
        assert bregman_wasserstein_1d(f, f, quartic()) == 0.0

    def test_quartic_constant_grids(self):
        assert bregman_wasserstein_1d(_grid([1, 1]), _grid([0, 0]), quartic()) == pytest.approx(1.0)

    def test_quartic_is_asymmetric(self):
        f, g = _grid([0, 1]), _grid([1, 2])
        assert bregman_wasserstein_1d(f, g, quartic()) != pytest.approx(bregman_wasserstein_1d(g, f, quartic()))


class TestDiscreteOracle:
    def test_identity(self):
        x = DiscreteCloud(np.random.default_rng(1).normal(size=(5, 3)))
        assert discrete_ot_oracle(x, x, NormPower(2, 2)) == pytest.approx(0.0, abs=1e-15)

    def test_swapped_corners(self):
        x = DiscreteCloud([[0, 0], [1, 1]])
        y = DiscreteCloud([[0, 1], [1, 0]])
        assert discrete_ot_oracle(x, y, NormPower(2, 2)) == pytest.approx(1.0, abs=1e-15)

    @pytest.mark.parametrize("seed", range(5))
    def test_one_dimension_matches_sorted_coupling(self, seed):
        rng = np.random.default_rng(seed)
        N = int(rng.integers(1, 8))
        x, y = rng.normal(size=(N, 1)), rng.normal(size=(N, 1))
        expected = wasserstein_1d(quantile_from_samples(x[:, 0], 2 * N), quantile_from_samples(y[:, 0], 2 * N))
        assert discrete_ot_oracle(DiscreteCloud(x), DiscreteCloud(y), NormPower(2, 2)) == pytest.approx(
            expected, abs=1e-12)

    def test_identity_weights_match_squared_norm(self):
        rng = np.random.default_rng(2)
        x, y = DiscreteCloud(rng.normal(size=(5, 3))), DiscreteCloud(rng.normal(size=(5, 3)))
        maha = discrete_ot_oracle(x, y, MahalanobisDiag(np.ones(3)))
        assert maha == pytest.approx(discrete_ot_oracle(x, y, NormPower(2, 2)) ** 2, rel=1e-12)

    def test_capacity(self):
        x = DiscreteCloud(np.zeros((10, 1)))
        with pytest.raises(CapacityError):
            discrete_ot_oracle(x, x, NormPower(2, 2))

    def test_size_mismatch(self):
        with pytest.raises(InvalidParameterError):
            discrete_ot_oracle(DiscreteCloud(np.zeros((2, 1))), DiscreteCloud(np.zeros((3, 1))), NormPower(2, 2))


class TestSeparableCost:
    def test_joint_at_least_marginal_sum(self):
        rng = np.random.default_rng(11)
        for _ in range(40):
            n, N = int(rng.integers(2, 4)), int(rng.integers(1, 7))
            phis = [quartic() if rng.random() < 0.5 else quadratic(1.0) for _ in range(n)]
            x, z = rng.normal(size=(N, n)), rng.normal(size=(N, n))
            assert separable_gap(x, z, phis) >= -1e-9

    def test_equal_on_coranked_clouds(self):
        rng = np.random.default_rng(12)
        for _ in range(40):
            n, N = int(rng.integers(2, 4)), int(rng.integers(1, 7))
            phis = [quartic() if rng.random() < 0.5 else quadratic(1.5) for _ in range(n)]
            x = rng.normal(size=(N, n))
            z = coranked(rng, x, rng.normal(size=(N, n)))
            assert separable_gap(x, z, phis) == pytest.approx(0.0, abs=1e-8)

    def test_joint_can_exceed_marginal_sum(self):
        # identical marginals, different pairing of coordinates
        x = np.array([[0.0, 0.0], [1.0, 1.0]])
        z = np.array([[0.0, 1.0], [1.0, 0.0]])
        assert separable_gap(x, z, [quadratic(1.0), quadratic(1.0)]) == pytest.approx(1.0)

    def test_generator_count_must_match(self):
        x = DiscreteCloud(np.zeros((2, 2)))
        with pytest.raises(InvalidParameterError):
            discrete_ot_oracle(x, x, SeparableBregman([quadratic(1.0)]))
