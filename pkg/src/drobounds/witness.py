"""Explicit perturbations that realise prescribed aggregate values, and
sample-level checks that a multivariate ball maps into a univariate one."""
from __future__ import annotations

from dataclasses import dataclass
from typing import Optional

import numpy as np

from .core import AggregationSpec, quantile_from_samples
from .divergence import DiscreteCloud, NormPower, discrete_ot_oracle, wasserstein_1d
from .errors import InfeasibleTargetError, InvalidParameterError, NoWitnessError


@dataclass(frozen=True)
class SupportBox:
    """Closed box ``[lo_k, hi_k]`` per coordinate."""

    lo: tuple
    hi: tuple

    def __post_init__(self):
        lo = tuple(float(v) for v in np.ravel(self.lo))
        hi = tuple(float(v) for v in np.ravel(self.hi))
        if len(lo) != len(hi) or not lo:
            raise InvalidParameterError("box bounds must have equal, positive length")
        if any(a > b for a, b in zip(lo, hi)):
            raise InvalidParameterError("box needs lo <= hi in every coordinate")
        object.__setattr__(self, "lo", lo)
        object.__setattr__(self, "hi", hi)

    @property
    def dim(self) -> int:
        return len(self.lo)

    def contains(self, points) -> bool:
        pts = np.atleast_2d(np.asarray(points, dtype=float))
        return bool(np.all((pts >= np.array(self.lo)) & (pts <= np.array(self.hi))))


def _lp_mean(values, p) -> float:
    return float(np.mean(np.abs(values) ** p) ** (1.0 / p))


def construct_witness(
    x_samples: DiscreteCloud,
    agg: AggregationSpec,
    z_target,
    epsilon: float,
    p: float = 2.0,
) -> DiscreteCloud:
    """Move only the linear block so that ``g(Z_i) = z_i``.

    For ``a > 1`` every linear coordinate moves along
    ``w = sign(beta) |beta|^(b/a)``, the direction for which ``‖w‖_a`` per
    unit of ``beta . w`` is smallest. For ``a = 1`` only the coordinate with
    the largest ``|beta_k|`` moves. Either way the identity coupling costs
    ``|z_i - g(x_i)| / ‖beta‖_b`` per point.

    Raises
    ------
    NoWitnessError
        If ``beta`` is zero.
    InfeasibleTargetError
        If the targets are further than ``‖beta‖_b epsilon`` from ``g(X)``.
    """
    x = x_samples.points
    z = np.asarray(z_target, dtype=float).ravel()
    if x.shape[1] != agg.n:
        raise InvalidParameterError(f"cloud dimension {x.shape[1]} does not match aggregation dimension {agg.n}")
    if z.size != x.shape[0]:
        raise InvalidParameterError("need one target per sample point")
    beta = agg.beta
    bn = agg.beta_norm
    if bn == 0:
        raise NoWitnessError("linear block is zero; the image ball is the single reference law")
    gap = z - agg.evaluate(x)
    reach = bn * epsilon
    if _lp_mean(gap, p) > reach * (1.0 + 1e-12) + 1e-15:
        raise InfeasibleTargetError(
            f"targets are {_lp_mean(gap, p):.6g} away but at most {reach:.6g} is reachable"
        )
    if agg.a == 1:
        j = int(np.argmax(np.abs(beta)))
        direction = np.zeros_like(beta)
        direction[j] = np.sign(beta[j]) / np.abs(beta[j])
    else:
        w = np.sign(beta) * np.abs(beta) ** (agg.b / agg.a)
        direction = w / float(beta @ w)
    z_pts = np.array(x, copy=True)
    z_pts[:, list(agg.linear_index)] += gap[:, None] * direction[None, :]
    return DiscreteCloud(z_pts)


@dataclass(frozen=True)
class InclusionVerdict:
    multivariate_distance: float
    univariate_distance: float
    epsilon: float
    K: float
    in_ball: bool
    image_in_ball: bool
    implication_holds: bool
    support_ok: Optional[bool]


def verify_inclusion(
    x_samples: DiscreteCloud,
    z_samples: DiscreteCloud,
    agg: AggregationSpec,
    epsilon: float,
    support: Optional[SupportBox] = None,
    p: float = 2.0,
    tol: float = 1e-9,
) -> InclusionVerdict:
    """Check on samples that ``W_n(Z, X) <= eps`` implies ``W(g(Z), g(X)) <= K eps``.

    The multivariate distance is exact (assignment enumeration); the
    univariate one uses empirical quantile grids, which is exact for equal
    sample sizes. ``support`` is checked against the nonlinear block of ``Z``.
    """
    w_n = discrete_ot_oracle(z_samples, x_samples, NormPower(agg.a, p))
    N = x_samples.N
    gz = quantile_from_samples(agg.evaluate(z_samples.points), 2 * N)
    gx = quantile_from_samples(agg.evaluate(x_samples.points), 2 * N)
    w_1 = wasserstein_1d(gz, gx, p)
    in_ball = w_n <= epsilon + tol
    image_in_ball = w_1 <= agg.K * epsilon + tol
    support_ok = None
    if support is not None:
        if support.dim != agg.m:
            raise InvalidParameterError("support box must cover the nonlinear block")
        support_ok = support.contains(agg.split(z_samples.points)[0])
    return InclusionVerdict(
        multivariate_distance=w_n,
        univariate_distance=w_1,
        epsilon=epsilon,
        K=agg.K,
        in_ball=in_ball,
        image_in_ball=image_in_ball,
        implication_holds=(not in_ball) or image_in_ball,
        support_ok=support_ok,
    )
