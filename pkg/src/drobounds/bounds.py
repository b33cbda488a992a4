"""Lower and upper bounds on the worst-case risk of an aggregate position.

Units differ by method and are recorded on every report: the Wasserstein
bounds take a radius, all Bregman-type bounds take a divergence budget.
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Optional, Sequence

import numpy as np

from .core import (
    AggregationSpec,
    BoundReport,
    BregmanGenerator,
    DistortionWeight,
    Method,
    QuantileGrid,
    choquet_integral,
    quadratic,
    vector_norm,
)
from .errors import AssumptionError, ConsistencyError, InvalidParameterError
from .worstcase import WeightCase, solve_lambda, weight_case

RADIUS = "wasserstein radius"
BUDGET = "divergence budget"


def lipschitz_bound(L: float, beta, a: float, n: int) -> float:
    """Lipschitz constant of ``g = nonlinear + beta . x`` from the parts:
    ``min(L + ‖beta‖_b, n^(1/b) max(L, ‖beta‖_b))``."""
    if L < 0:
        raise InvalidParameterError("L must be non-negative")
    b = math.inf if a == 1 else (1.0 if math.isinf(a) else a / (a - 1.0))
    bn = vector_norm(beta, b)
    root = 1.0 if math.isinf(b) else n ** (1.0 / b)
    return min(L + bn, root * max(L, bn))


def _check_radius(epsilon):
    if not (epsilon >= 0 and math.isfinite(epsilon)):
        raise InvalidParameterError(f"tolerance must be finite and non-negative, got {epsilon}")


def _degenerate(f, gamma, method, epsilon, units) -> BoundReport:
    ref = choquet_integral(f, gamma)
    return BoundReport(ref, ref, ref, method, epsilon, units, lower_curve=f, upper_curve=f,
                       upper_pre_projection=f.values)


def _check_dominance(report: BoundReport, gamma: DistortionWeight):
    if gamma.is_non_negative and report.reference_risk > report.upper + 1e-9 * max(1.0, abs(report.upper)):
        raise ConsistencyError("upper bound fell below the reference risk for a non-negative weight")
    return report


def _quadratic_pair(f, gamma, lower_budget, upper_budget, force_isotonic, method, epsilon, units):
    """Bounds from two univariate quadratic balls with the given budgets."""
    unit = quadratic(1.0)
    closed = False if force_isotonic else None
    up = solve_lambda(f, gamma, unit, upper_budget, closed_form=closed)
    if lower_budget > 0:
        lo = solve_lambda(f, gamma, unit, lower_budget, closed_form=closed)
        lower, lower_lambda, lower_curve = lo.worst_risk, lo.lambda_star, lo.worst_curve
    else:
        lower, lower_lambda, lower_curve = choquet_integral(f, gamma), None, f
    return BoundReport(
        reference_risk=choquet_integral(f, gamma),
        lower=lower,
        upper=up.worst_risk,
        method=method,
        epsilon=epsilon,
        units=units,
        lower_lambda=lower_lambda,
        upper_lambda=up.lambda_star,
        lower_curve=lower_curve,
        upper_curve=up.worst_curve,
        upper_pre_projection=up.pre_projection,
    )


def _shift_pair(f, gamma, lower_radius, upper_radius, method, epsilon, units):
    """Closed-form bounds for a non-decreasing weight: shift by ``radius * gamma / ‖gamma‖``."""
    ref = choquet_integral(f, gamma)
    norm = gamma.l2_norm
    direction = gamma.on_grid(f.M) / norm
    upper_curve = QuantileGrid(f.values + upper_radius * direction)
    lower_curve = QuantileGrid(f.values + lower_radius * direction)
    return BoundReport(
        reference_risk=ref,
        lower=ref + lower_radius * norm,
        upper=ref + upper_radius * norm,
        method=method,
        epsilon=epsilon,
        units=units,
        lower_lambda=norm / (2.0 * lower_radius) if lower_radius > 0 else None,
        upper_lambda=norm / (2.0 * upper_radius) if upper_radius > 0 else None,
        lower_curve=lower_curve,
        upper_curve=upper_curve,
        upper_pre_projection=upper_curve.values,
    )


def wasserstein_bounds(
    f_agg: QuantileGrid,
    gamma: DistortionWeight,
    agg: AggregationSpec,
    epsilon: float,
    K: Optional[float] = None,
    beta_norm: Optional[float] = None,
    force_isotonic: bool = False,
) -> BoundReport:
    """Bounds for a Wasserstein ball of radius ``epsilon`` around the joint law.

    The image of the ball under ``g`` contains the univariate ball of radius
    ``‖beta‖_2 epsilon`` and is contained in the one of radius ``K epsilon``.

    Parameters
    ----------
    f_agg : QuantileGrid
        Quantile function of ``g(X)``.
    gamma : DistortionWeight
    agg : AggregationSpec
        Must use ``a = 2``.
    epsilon : float
        Wasserstein radius. Zero gives the trivial report.
    K, beta_norm : float, optional
        Overrides for the constants carried by ``agg``, e.g. a Lipschitz
        constant restricted to a compact support of the nonlinear block.
    force_isotonic : bool
        Use the root-finding path even when the closed form applies.
    """
    if agg.a != 2:
        raise InvalidParameterError("Wasserstein bounds are implemented for a = 2")
    _check_radius(epsilon)
    case = weight_case(gamma)
    K = agg.K if K is None else float(K)
    bn = agg.beta_norm if beta_norm is None else float(beta_norm)
    if bn > K * (1.0 + 1e-12):
        raise InvalidParameterError(f"beta norm {bn} exceeds K = {K}")
    closed = case is WeightCase.NON_DECREASING and not force_isotonic
    method = Method.WASSERSTEIN_LIPSCHITZ_I if closed else Method.WASSERSTEIN_LIPSCHITZ_II
    if epsilon == 0:
        return _degenerate(f_agg, gamma, method, 0.0, RADIUS)
    if closed:
        report = _shift_pair(f_agg, gamma, bn * epsilon, K * epsilon, method, epsilon, RADIUS)
    else:
        report = _quadratic_pair(f_agg, gamma, (bn * epsilon) ** 2, (K * epsilon) ** 2,
                                 force_isotonic, method, epsilon, RADIUS)
    return _check_dominance(report, gamma)


@dataclass(frozen=True)
class MahalanobisSpec:
    """Diagonal of a positive definite weighting matrix."""

    q_diag: tuple

    def __post_init__(self):
        q = tuple(float(v) for v in np.ravel(self.q_diag))
        if not q or any(not (v > 0 and math.isfinite(v)) for v in q):
            raise InvalidParameterError("Mahalanobis weights must be positive and finite")
        object.__setattr__(self, "q_diag", q)

    @property
    def q_min(self) -> float:
        return min(self.q_diag)

    @property
    def q_max(self) -> float:
        return max(self.q_diag)


def mahalanobis_bounds(
    f_agg: QuantileGrid,
    gamma: DistortionWeight,
    agg: AggregationSpec,
    q: MahalanobisSpec,
    epsilon: float,
    scaling: str = "squared",
    force_isotonic: bool = False,
) -> BoundReport:
    """Bounds for a diagonal Mahalanobis ball with budget ``epsilon``.

    With ``scaling="squared"`` the univariate balls have squared radii
    ``K^2 epsilon / q_min`` (outer) and ``‖beta‖^2 epsilon / q_max`` (inner),
    which follows from ``q_min ‖x‖^2 <= x^T Q x <= q_max ‖x‖^2`` and makes the
    identity weighting agree with the Wasserstein bounds at radius
    ``sqrt(epsilon)``. ``scaling="linear"`` uses ``K epsilon / q_min`` and
    ``‖beta‖ epsilon / q_max`` instead; the two coincide when ``K = ‖beta‖ = 1``.
    """
    if agg.a != 2:
        raise InvalidParameterError("Mahalanobis bounds are implemented for a = 2")
    if len(q.q_diag) != agg.n:
        raise InvalidParameterError(f"need {agg.n} Mahalanobis weights, got {len(q.q_diag)}")
    _check_radius(epsilon)
    case = weight_case(gamma)
    closed = case is WeightCase.NON_DECREASING and not force_isotonic
    method = Method.MAHALANOBIS_I if closed else Method.MAHALANOBIS_II
    if epsilon == 0:
        return _degenerate(f_agg, gamma, method, 0.0, BUDGET)
    K, bn = agg.K, agg.beta_norm
    if scaling == "squared":
        upper_budget = K * K * epsilon / q.q_min
        lower_budget = bn * bn * epsilon / q.q_max
    elif scaling == "linear":
        upper_budget = K * epsilon / q.q_min
        lower_budget = bn * epsilon / q.q_max
    else:
        raise InvalidParameterError(f"unknown scaling {scaling!r}")
    if closed:
        report = _shift_pair(f_agg, gamma, math.sqrt(lower_budget), math.sqrt(upper_budget), method, epsilon, BUDGET)
    else:
        report = _quadratic_pair(f_agg, gamma, lower_budget, upper_budget, force_isotonic, method, epsilon, BUDGET)
    return _check_dominance(report, gamma)


def separable_bregman_bounds(
    marginal_quantiles: Sequence[QuantileGrid],
    gamma: DistortionWeight,
    phis: Sequence[BregmanGenerator],
    beta,
    epsilon: float,
) -> BoundReport:
    """Bounds for ``beta . X`` under a separable Bregman-Wasserstein ball.

    Each component is solved on its own with budget ``epsilon`` (upper) and
    ``epsilon / n`` (lower). The upper side needs a subadditive risk and the
    lower side a comonotonic additive one; a non-negative, non-decreasing
    weight provides both. ``reference_risk`` is the comonotonic sum
    ``sum beta_i I(X_i)``, the common limit of both bounds as the budget
    vanishes.

    The joint divergence is at least the sum of the marginal ones, with
    equality when perturbed and reference points share coordinate ranks. The
    lower bound therefore assumes the comonotonic perturbation stays inside
    the joint ball, which holds when ``X`` itself is comonotonic.
    """
    beta = np.asarray(beta, dtype=float).ravel()
    n = len(marginal_quantiles)
    if beta.size != n or len(phis) != n:
        raise InvalidParameterError("need one marginal, generator and weight per component")
    if np.any(beta < 0):
        raise AssumptionError("separable bounds need non-negative linear weights")
    if not (gamma.is_non_negative and gamma.is_non_decreasing):
        raise AssumptionError("separable bounds need a non-negative, non-decreasing distortion weight")
    _check_radius(epsilon)
    ref = math.fsum(b * choquet_integral(f, gamma) for b, f in zip(beta, marginal_quantiles))
    if epsilon == 0:
        return BoundReport(ref, ref, ref, Method.SEPARABLE_BREGMAN, 0.0, BUDGET)
    upper_parts, lower_parts, upper_lams, lower_lams = [], [], [], []
    for b, f, phi in zip(beta, marginal_quantiles, phis):
        up = solve_lambda(f, gamma, phi, epsilon)
        lo = solve_lambda(f, gamma, phi, epsilon / n)
        upper_parts.append(b * up.worst_risk)
        lower_parts.append(b * lo.worst_risk)
        upper_lams.append(up.lambda_star)
        lower_lams.append(lo.lambda_star)
    return BoundReport(
        reference_risk=ref,
        lower=math.fsum(lower_parts),
        upper=math.fsum(upper_parts),
        method=Method.SEPARABLE_BREGMAN,
        epsilon=epsilon,
        units=BUDGET,
        lower_lambda=tuple(lower_lams),
        upper_lambda=tuple(upper_lams),
    )


def separable_gap_bound(beta, lipschitz_of_inverse, lambdas, gamma: DistortionWeight) -> float:
    """``sum beta_i L_i (1/lam_up_i - 1/lam_low_i) ‖gamma‖^2``.

    ``lambdas`` holds ``(upper-budget multiplier, lower-budget multiplier)``
    pairs; ``L_i`` is the Lipschitz constant of ``(phi_i')^{-1}``.
    """
    beta = np.asarray(beta, dtype=float).ravel()
    L = np.asarray(lipschitz_of_inverse, dtype=float).ravel()
    lams = np.asarray(lambdas, dtype=float).reshape(-1, 2)
    if np.any(lams <= 0) or np.any(L < 0):
        raise InvalidParameterError("multipliers must be positive and Lipschitz constants non-negative")
    terms = beta * L * (1.0 / lams[:, 0] - 1.0 / lams[:, 1])
    return math.fsum(terms) * gamma.l2_norm_sq


def composable_upper_bound(f_agg: QuantileGrid, gamma: DistortionWeight, phi: BregmanGenerator, epsilon: float) -> float:
    """Worst case over the univariate ball ``{B_phi(G, F_agg) <= epsilon}``.

    Valid as an upper bound when ``phi`` is non-decreasing on the range of
    the aggregate; the grid alone cannot certify that.
    """
    _check_radius(epsilon)
    if epsilon == 0:
        return choquet_integral(f_agg, gamma)
    return solve_lambda(f_agg, gamma, phi, epsilon).worst_risk


@dataclass(frozen=True)
class Table1Report:
    """Bound comparison for a linear aggregate with non-negative weights."""

    reference_risk: float
    rows: tuple  # ((name, value), ...)

    def as_dict(self) -> dict:
        return dict(self.rows)


def _penalty(f, gamma, phi, budget):
    return solve_lambda(f, gamma, phi, budget).worst_risk - choquet_integral(f, gamma)


def table1_compare(
    agg: AggregationSpec,
    gamma: DistortionWeight,
    marginals: Sequence[QuantileGrid],
    f_agg: QuantileGrid,
    epsilon: float,
    mahalanobis: Optional[MahalanobisSpec] = None,
    mahalanobis_budget: Optional[float] = None,
) -> Table1Report:
    """Direct and separable bounds side by side, all anchored at ``I(beta . X)``.

    The Wasserstein rows read ``epsilon`` as a radius; separable components
    therefore get budgets ``epsilon^2`` and ``epsilon^2 / n``. Mahalanobis
    rows read ``mahalanobis_budget`` (default ``epsilon^2``) as a budget, with
    separable components using generators ``q_i x^2``.

    Raises
    ------
    ConsistencyError
        If ``sep_lower <= direct_lower <= direct_upper <= sep_upper`` fails.
    """
    if agg.m != 0 or agg.a != 2:
        raise InvalidParameterError("comparison needs a linear aggregate with a = 2")
    beta = agg.beta
    if np.any(beta < 0):
        raise AssumptionError("comparison needs non-negative linear weights")
    if not (gamma.is_non_negative and gamma.is_non_decreasing):
        raise AssumptionError("comparison needs a non-negative, non-decreasing distortion weight")
    if len(marginals) != agg.n:
        raise InvalidParameterError("need one marginal per coordinate")
    if not epsilon > 0:
        raise InvalidParameterError("comparison needs a positive radius")
    n = agg.n
    ref = choquet_integral(f_agg, gamma)
    norm = gamma.l2_norm
    unit = quadratic(1.0)
    rows = [
        ("wasserstein_direct_lower", ref + agg.beta_norm * norm * epsilon),
        ("wasserstein_direct_upper", ref + agg.K * norm * epsilon),
        ("wasserstein_separable_lower",
         ref + math.fsum(b * _penalty(f, gamma, unit, epsilon ** 2 / n) for b, f in zip(beta, marginals))),
        ("wasserstein_separable_upper",
         ref + math.fsum(b * _penalty(f, gamma, unit, epsilon ** 2) for b, f in zip(beta, marginals))),
    ]
    table = dict(rows)
    chain = [table["wasserstein_separable_lower"], table["wasserstein_direct_lower"],
             table["wasserstein_direct_upper"], table["wasserstein_separable_upper"]]
    tol = 1e-9 * max(1.0, max(abs(v) for v in chain))
    if any(a > b + tol for a, b in zip(chain, chain[1:])):
        raise ConsistencyError(f"bound ordering violated: {chain}")

    if mahalanobis is not None:
        budget = epsilon ** 2 if mahalanobis_budget is None else float(mahalanobis_budget)
        direct = mahalanobis_bounds(f_agg, gamma, agg, mahalanobis, budget)
        gens = [quadratic(qi) for qi in mahalanobis.q_diag]
        rows += [
            ("mahalanobis_direct_lower", direct.lower),
            ("mahalanobis_direct_upper", direct.upper),
            ("mahalanobis_separable_lower",
             ref + math.fsum(b * _penalty(f, gamma, phi, budget / n) for b, f, phi in zip(beta, marginals, gens))),
            ("mahalanobis_separable_upper",
             ref + math.fsum(b * _penalty(f, gamma, phi, budget) for b, f, phi in zip(beta, marginals, gens))),
        ]
    return Table1Report(reference_risk=ref, rows=tuple(rows))
