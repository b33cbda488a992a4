import math

import numpy as np
import pytest

from drobounds import (
    AggregationSpec,
    DiscreteCloud,
    InfeasibleTargetError,
    InvalidParameterError,
    NoWitnessError,
    SupportBox,
    construct_witness,
    linear_aggregation,
    portfolio_aggregation,
    verify_inclusion,
)
from drobounds.verify import full_budget_targets, random_relu_aggregation


class TestConstructWitness:
    def test_single_point(self):
        agg = linear_aggregation([3.0, 4.0])
        w = construct_witness(DiscreteCloud([[0.0, 0.0]]), agg, [5.0], 1.0)
        np.testing.assert_allclose(w.points, [[0.6, 0.8]], atol=1e-15)
        assert agg.evaluate(w.points)[0] == pytest.approx(5.0)
        assert np.linalg.norm(w.points[0]) == pytest.approx(1.0)

    def test_identity_targets(self):
        rng = np.random.default_rng(0)
        x = DiscreteCloud(rng.normal(size=(5, 4)))
        agg = portfolio_aggregation()
        w = construct_witness(x, agg, agg.evaluate(x.points), 0.5)
        np.testing.assert_array_equal(w.points, x.points)

    def test_a_equal_one_moves_largest_coordinate(self):
        agg = linear_aggregation([1.0, -2.0], a=1.0)
        w = construct_witness(DiscreteCloud([[0.0, 0.0]]), agg, [1.0], 1.0)
        np.testing.assert_allclose(w.points, [[0.0, -0.5]])

    def test_only_linear_block_moves(self):
        rng = np.random.default_rng(1)
        agg = portfolio_aggregation()
        x = DiscreteCloud(rng.normal(size=(4, 4)) + [4, 6, 30, 35])
        z = agg.evaluate(x.points) + 1.0
        w = construct_witness(x, agg, z, 1.0)
        np.testing.assert_array_equal(w.points[:, [1, 2]], x.points[:, [1, 2]])
        np.testing.assert_allclose(agg.evaluate(w.points), z, rtol=1e-12)

    def test_zero_linear_block(self):
        agg = AggregationSpec(n=1, m=1, nonlinear=lambda x: np.sin(x[..., 0]), beta=[], K=1.0, L=1.0)
        with pytest.raises(NoWitnessError):
            construct_witness(DiscreteCloud([[0.0]]), agg, [0.5], 1.0)

    def test_infeasible_target(self):
        agg = linear_aggregation([3.0, 4.0])
        with pytest.raises(InfeasibleTargetError):
            construct_witness(DiscreteCloud([[0.0, 0.0]]), agg, [5.1], 1.0)

    def test_shape_checks(self):
        agg = linear_aggregation([3.0, 4.0])
        with pytest.raises(InvalidParameterError):
            construct_witness(DiscreteCloud([[0.0, 0.0]]), agg, [1.0, 2.0], 1.0)
        with pytest.raises(InvalidParameterError):
            construct_witness(DiscreteCloud([[0.0, 0.0, 0.0]]), agg, [1.0], 1.0)


class TestVerifyInclusion:
    def test_identity(self):
        x = DiscreteCloud(np.random.default_rng(2).normal(size=(4, 4)))
        v = verify_inclusion(x, x, portfolio_aggregation(), 0.1)
        assert v.multivariate_distance == pytest.approx(0.0, abs=1e-15)
        assert v.univariate_distance == 0.0
        assert v.in_ball and v.image_in_ball and v.implication_holds

    @pytest.mark.parametrize("seed", range(10))
    def test_relu_witness_sandwich(self, seed):
        rng = np.random.default_rng(seed)
        agg = random_relu_aggregation(rng)
        N = int(rng.integers(1, 7))
        eps = float(rng.uniform(0.1, 2.0))
        x = DiscreteCloud(rng.normal(size=(N, agg.n)))
        z = full_budget_targets(rng, agg.evaluate(x.points), agg.beta_norm * eps)
        w = construct_witness(x, agg, z, eps)
        np.testing.assert_allclose(agg.evaluate(w.points), z, rtol=1e-12, atol=1e-12)
        v = verify_inclusion(x, w, agg, eps)
        assert v.in_ball
        assert v.univariate_distance <= agg.K * eps + 1e-9

    @pytest.mark.parametrize("seed", range(10))
    def test_linear_two_sided(self, seed):
        rng = np.random.default_rng(100 + seed)
        agg = linear_aggregation(rng.normal(size=3))
        x = DiscreteCloud(rng.normal(size=(5, 3)))
        eps = 0.7
        z = full_budget_targets(rng, agg.evaluate(x.points), agg.beta_norm * eps)
        v = verify_inclusion(x, construct_witness(x, agg, z, eps), agg, eps)
        assert agg.beta_norm * eps - 1e-9 <= v.univariate_distance <= agg.K * eps + 1e-9

    def test_support_box(self):
        agg = portfolio_aggregation()
        x = DiscreteCloud([[4.0, 6.0, 30.0, 35.0]])
        box = SupportBox([0.0, 0.0], [10.0, 40.0])
        assert verify_inclusion(x, x, agg, 1.0, support=box).support_ok
        outside = DiscreteCloud([[4.0, 60.0, 30.0, 35.0]])
        assert not verify_inclusion(x, outside, agg, 100.0, support=box).support_ok
        with pytest.raises(InvalidParameterError):
            verify_inclusion(x, x, agg, 1.0, support=SupportBox([0.0], [1.0]))


class TestSupportBox:
    def test_rejects_inverted_bounds(self):
        with pytest.raises(InvalidParameterError):
            SupportBox([1.0], [0.0])

    def test_contains(self):
        box = SupportBox([0.0, -math.inf], [1.0, math.inf])
        assert box.contains(np.array([[0.5, 1e9]]))
        assert not box.contains(np.array([[1.5, 0.0]]))
