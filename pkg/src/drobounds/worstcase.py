"""Worst-case signed Choquet integral over a univariate Bregman-Wasserstein ball.

For a multiplier ``lam > 0`` the candidate maximiser is
``(phi')^{-1}( iso( phi'(F^{-1}) + gamma / lam ) )``; the optimal multiplier is
the smallest ``lam`` whose candidate exhausts the budget.
"""
from __future__ import annotations

import enum
import math
from dataclasses import dataclass

import numpy as np

from .core import BregmanGenerator, DistortionWeight, QuantileGrid, choquet_integral
from .divergence import bregman_wasserstein_1d
from .errors import CapacityError, ConsistencyError, InvalidParameterError, NoSolutionError, UnsupportedDistortionError
from .isotonic import isotonic

RTOL_LAMBDA = 1e-10
MAX_BISECTIONS = 200
MAX_EXPANSION = 1e8
SCAN_STEP = 10.0 ** 0.1


class WeightCase(str, enum.Enum):
    NON_DECREASING = "gamma_non_decreasing"
    NON_NEGATIVE = "gamma_non_negative"


def weight_case(gamma: DistortionWeight) -> WeightCase:
    if gamma.is_non_decreasing:
        return WeightCase.NON_DECREASING
    if gamma.is_non_negative:
        return WeightCase.NON_NEGATIVE
    raise UnsupportedDistortionError(
        "worst-case solution requires a distortion weight that is non-decreasing or non-negative"
    )


@dataclass(frozen=True, eq=False)
class SolveReport:
    lambda_star: float
    worst_curve: QuantileGrid
    worst_risk: float
    constraint_residual: float
    case: WeightCase
    closed_form: bool = False
    pre_projection: np.ndarray = None


def _transformed(f: QuantileGrid, gamma: DistortionWeight, phi: BregmanGenerator, lam: float):
    if not lam > 0:
        raise InvalidParameterError(f"multiplier must be positive, got {lam}")
    h = phi.phi_prime(f.values) + gamma.on_grid(f.M) / lam
    if gamma.is_non_decreasing:
        if np.any(np.diff(h) < 0):
            raise ConsistencyError("transformed quantile should already be non-decreasing")
        projected = h
    else:
        projected = isotonic(h)
    return h, projected


def candidate_quantile(f: QuantileGrid, gamma: DistortionWeight, phi: BregmanGenerator, lam: float) -> QuantileGrid:
    """Candidate maximiser for multiplier ``lam``."""
    _, projected = _transformed(f, gamma, phi, lam)
    return QuantileGrid(phi.phi_prime_inverse(projected))


def pre_projection_curve(f: QuantileGrid, gamma: DistortionWeight, phi: BregmanGenerator, lam: float) -> np.ndarray:
    """``(phi')^{-1}`` of the transformed quantile before the isotonic step; may be non-monotone."""
    if not lam > 0:
        raise InvalidParameterError(f"multiplier must be positive, got {lam}")
    h = phi.phi_prime(f.values) + gamma.on_grid(f.M) / lam
    return np.asarray(phi.phi_prime_inverse(h), dtype=float)


def _closed_form(f, gamma, phi, epsilon) -> SolveReport:
    c = phi.scale
    norm = gamma.l2_norm
    lam = norm / (2.0 * math.sqrt(c * epsilon))
    radius = math.sqrt(epsilon / c)
    shift = gamma.on_grid(f.M) * (radius / norm)
    curve = QuantileGrid(f.values + shift)
    residual = abs(bregman_wasserstein_1d(curve, f, phi) - epsilon)
    return SolveReport(
        lambda_star=lam,
        worst_curve=curve,
        worst_risk=choquet_integral(f, gamma) + radius * norm,
        constraint_residual=residual,
        case=WeightCase.NON_DECREASING,
        closed_form=True,
        pre_projection=curve.values,
    )


def solve_lambda(
    f: QuantileGrid,
    gamma: DistortionWeight,
    phi: BregmanGenerator,
    epsilon: float,
    closed_form: bool | None = None,
) -> SolveReport:
    """Maximise the signed Choquet integral over ``{G : B_phi(G, F) <= epsilon}``.

    Parameters
    ----------
    f : QuantileGrid
        Reference quantile function.
    gamma : DistortionWeight
        Must be non-decreasing or non-negative.
    phi : BregmanGenerator
    epsilon : float
        Divergence budget (a squared radius for ``quadratic(1)``).
    closed_form : bool, optional
        Force (``True``) or forbid (``False``) the algebraic solution available
        for a quadratic generator with a non-decreasing weight. By default it is
        used whenever applicable.

    Returns
    -------
    SolveReport

    Raises
    ------
    UnsupportedDistortionError
        If ``gamma`` satisfies neither shape condition.
    NoSolutionError
        If no sign change of the budget residual is found within ``1e8``-fold
        expansion of the multiplier.
    """
    if not epsilon > 0 or not math.isfinite(epsilon):
        raise InvalidParameterError(f"budget must be positive and finite, got {epsilon}")
    case = weight_case(gamma)
    applicable = phi.is_quadratic and case is WeightCase.NON_DECREASING
    if closed_form and not applicable:
        raise InvalidParameterError("closed form needs a quadratic generator and a non-decreasing weight")
    if applicable and closed_form is not False:
        return _closed_form(f, gamma, phi, epsilon)

    def residual(lam):
        return bregman_wasserstein_1d(candidate_quantile(f, gamma, phi, lam), f, phi) - epsilon

    lo = 1.0
    r_lo = residual(lo)
    while r_lo <= 0:
        lo /= 10.0
        if lo < 1.0 / MAX_EXPANSION:
            raise NoSolutionError("budget not exhausted even for very small multipliers")
        r_lo = residual(lo)

    # first sign change scanning upwards keeps the smallest root
    hi = lo
    while True:
        nxt = hi * SCAN_STEP
        if nxt > MAX_EXPANSION:
            raise NoSolutionError("budget residual did not change sign for multipliers up to 1e8")
        r_nxt = residual(nxt)
        if r_nxt <= 0:
            hi, r_hi = nxt, r_nxt
            break
        lo, r_lo, hi = nxt, r_nxt, nxt

    tol_r = 1e-10 * (1.0 + epsilon)
    lam, r = hi, r_hi
    for _ in range(MAX_BISECTIONS):
        if abs(r) <= tol_r or hi / lo - 1.0 <= RTOL_LAMBDA:
            break
        mid = math.sqrt(lo * hi)
        r_mid = residual(mid)
        if r_mid > 0:
            lo = mid
        else:
            hi = mid
        lam, r = mid, r_mid

    curve = candidate_quantile(f, gamma, phi, lam)
    return SolveReport(
        lambda_star=lam,
        worst_curve=curve,
        worst_risk=choquet_integral(curve, gamma),
        constraint_residual=abs(r),
        case=case,
        closed_form=False,
        pre_projection=pre_projection_curve(f, gamma, phi, lam),
    )


ORACLE_MAX_M = 50


def _budget_used(q, fv, phi):
    return float(np.mean(phi.pointwise(q, fv)))


def _random_feasible_start(rng, fv, phi, epsilon):
    d = np.sort(rng.normal(size=fv.size))
    d -= d.mean()
    t = 1.0
    while _budget_used(fv + t * d, fv, phi) > epsilon:
        t *= 0.5
    return fv + t * rng.uniform(0.1, 1.0) * d


def _retract(q, fv, phi, epsilon):
    """Largest step from ``fv`` towards ``q`` that stays inside the budget."""
    if _budget_used(q, fv, phi) <= epsilon:
        return q
    lo, hi = 0.0, 1.0
    for _ in range(60):
        mid = 0.5 * (lo + hi)
        if _budget_used(fv + mid * (q - fv), fv, phi) <= epsilon:
            lo = mid
        else:
            hi = mid
    return fv + lo * (q - fv)


def _ascent_run(q, g, fv, phi, epsilon, iterations):
    direction = g / np.linalg.norm(g) * math.sqrt(fv.size)
    for k in range(1, iterations + 1):
        q = _retract(isotonic(q + (0.5 / math.sqrt(k)) * direction), fv, phi, epsilon)
    return q


def _sqp_run(q0, g, fv, phi, epsilon):
    from scipy.optimize import minimize

    M = fv.size
    D = np.diff(np.eye(M), axis=0)
    constraints = [
        {"type": "ineq", "fun": lambda q: D @ q, "jac": lambda q: D},
        {
            "type": "ineq",
            "fun": lambda q: epsilon - _budget_used(q, fv, phi),
            "jac": lambda q: -(phi.phi_prime(q) - phi.phi_prime(fv)) / M,
        },
    ]
    res = minimize(
        lambda q: -(g @ q) / M,
        q0,
        jac=lambda q: -g / M,
        constraints=constraints,
        method="SLSQP",
        options={"maxiter": 1000, "ftol": 1e-13},
    )
    # clean solver round-off so only strictly feasible points are scored
    return _retract(isotonic(res.x), fv, phi, epsilon)


def worstcase_brute_oracle(
    f: QuantileGrid,
    gamma: DistortionWeight,
    phi: BregmanGenerator,
    epsilon: float,
    starts: int = 20,
    seed: int = 0,
    method: str = "sqp",
    iterations: int = 5000,
) -> float:
    """Direct numerical maximisation of ``(1/M) sum gamma_j q_j`` over monotone
    ``q`` with ``B_phi(q, f) <= epsilon``, from random feasible starts.

    ``method="sqp"`` runs SLSQP with the monotonicity and budget constraints
    written out explicitly. ``method="ascent"`` runs projected ascent: a step
    along ``gamma``, PAVA, then a line search back towards ``f``. The line
    search is not a true projection, so the ascent can stall when PAVA pools
    blocks; it is exact for non-decreasing weights.

    Returns the best objective over starts; ties resolve to the earliest start.
    """
    M = f.M
    if M > ORACLE_MAX_M:
        raise CapacityError(f"brute-force oracle supports M <= {ORACLE_MAX_M}, got {M}")
    if epsilon < 0:
        raise InvalidParameterError("budget must be non-negative")
    if not gamma.is_non_negative:
        raise UnsupportedDistortionError("brute-force oracle expects a non-negative weight")
    if epsilon == 0:
        return choquet_integral(f, gamma)
    g = gamma.on_grid(M)
    fv = f.values
    rng = np.random.default_rng(seed)
    best = choquet_integral(f, gamma)
    for _ in range(starts):
        q0 = _random_feasible_start(rng, fv, phi, epsilon)
        if method == "sqp":
            q = _sqp_run(q0, g, fv, phi, epsilon)
        elif method == "ascent":
            q = _ascent_run(q0, g, fv, phi, epsilon, iterations)
        else:
            raise InvalidParameterError(f"unknown oracle method {method!r}")
        best = max(best, float(g @ q) / M)
    return best

