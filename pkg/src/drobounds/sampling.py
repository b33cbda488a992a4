"""Reference model for the portfolio study: marginals, a Student-t copula,
seeded Monte Carlo and a sampled Lipschitz estimate."""
from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable, Sequence, Union

import numpy as np
from scipy import stats

from .core import AggregationSpec
from .divergence import DiscreteCloud
from .errors import InvalidParameterError
from .witness import SupportBox

SHARD_SIZE = 1 << 16


@dataclass(frozen=True)
class Normal:
    mu: float
    sigma: float

    def __post_init__(self):
        if not self.sigma > 0:
            raise InvalidParameterError("normal sigma must be positive")

    @property
    def dist(self):
        return stats.norm(loc=self.mu, scale=self.sigma)


@dataclass(frozen=True)
class Weibull:
    """Density ``(k/lam) (x/lam)^(k-1) exp(-(x/lam)^k)``."""

    lam: float
    k: float

    def __post_init__(self):
        if not (self.lam > 0 and self.k > 0):
            raise InvalidParameterError("Weibull scale and shape must be positive")

    @property
    def dist(self):
        return stats.weibull_min(c=self.k, scale=self.lam)


@dataclass(frozen=True)
class LogNormal:
    """``exp(N(mu, sigma^2))``."""

    mu: float
    sigma: float

    def __post_init__(self):
        if not self.sigma > 0:
            raise InvalidParameterError("log-normal sigma must be positive")

    @property
    def dist(self):
        return stats.lognorm(s=self.sigma, scale=math.exp(self.mu))


MarginalSpec = Union[Normal, Weibull, LogNormal]


@dataclass(frozen=True)
class Independent:
    pass


@dataclass(frozen=True)
class StudentT:
    """t copula with an equicorrelated scale matrix."""

    df: float
    rho: float

    def __post_init__(self):
        if not self.df > 0:
            raise InvalidParameterError("degrees of freedom must be positive")

    def scale_matrix(self, n: int) -> np.ndarray:
        if n > 1 and not (-1.0 / (n - 1) < self.rho < 1.0):
            raise InvalidParameterError(f"equicorrelation {self.rho} is not positive definite for n = {n}")
        return np.full((n, n), self.rho) + (1.0 - self.rho) * np.eye(n)


CopulaSpec = Union[Independent, StudentT]


@dataclass(frozen=True)
class ReferenceModel:
    marginals: tuple
    copula: CopulaSpec = Independent()

    def __post_init__(self):
        object.__setattr__(self, "marginals", tuple(self.marginals))
        if not self.marginals:
            raise InvalidParameterError("reference model needs at least one marginal")
        if isinstance(self.copula, StudentT):
            self.copula.scale_matrix(self.n)

    @property
    def n(self) -> int:
        return len(self.marginals)


def portfolio_model() -> ReferenceModel:
    """Four risk factors joined by a t copula with 3 degrees of freedom."""
    return ReferenceModel(
        marginals=(Normal(4.0, 1.0), Weibull(2.0, 0.5), LogNormal(3.0, 1.0), Normal(35.0, 1.0)),
        copula=StudentT(df=3.0, rho=0.7),
    )


def _shard_scores(model: ReferenceModel, rng: np.random.Generator, size: int):
    """Latent scores and their distribution for one shard."""
    n = model.n
    cop = model.copula
    if isinstance(cop, StudentT):
        chol = np.linalg.cholesky(cop.scale_matrix(n))
        z = rng.standard_normal((size, n)) @ chol.T
        w = rng.chisquare(cop.df, size)
        return z / np.sqrt(w / cop.df)[:, None], stats.t(cop.df)
    return rng.standard_normal((size, n)), stats.norm()


def _shards(N: int, seed: int):
    if N < 1:
        raise InvalidParameterError("sample size must be positive")
    count = -(-N // SHARD_SIZE)
    children = np.random.SeedSequence(seed).spawn(count)
    for i, child in enumerate(children):
        yield np.random.Generator(np.random.PCG64(child)), min(SHARD_SIZE, N - i * SHARD_SIZE)


def sample_copula(model: ReferenceModel, N: int, seed: int) -> np.ndarray:
    """Uniform ranks ``(N, n)`` of the copula alone."""
    parts = []
    for rng, size in _shards(N, seed):
        t, ref = _shard_scores(model, rng, size)
        parts.append(ref.cdf(t))
    return np.concatenate(parts)


def sample_reference(model: ReferenceModel, N: int, seed: int) -> DiscreteCloud:
    """Seeded draw of ``N`` points from the reference model.

    Work is split into fixed shards of ``SHARD_SIZE`` rows with independent
    child seeds, so the output does not depend on how shards are scheduled.
    Upper-tail scores map through survival functions to keep tail precision.
    """
    parts = []
    for rng, size in _shards(N, seed):
        t, ref = _shard_scores(model, rng, size)
        cols = []
        for k, marg in enumerate(model.marginals):
            d = marg.dist
            tk = t[:, k]
            upper = tk > 0
            col = np.empty(size)
            col[~upper] = d.ppf(ref.cdf(tk[~upper]))
            col[upper] = d.isf(ref.sf(tk[upper]))
            cols.append(col)
        parts.append(np.column_stack(cols))
    return DiscreteCloud(np.concatenate(parts))


def _portfolio_options(x):
    return -2.0 * np.maximum(x[..., 0] - 5.0, 0.0) - 3.0 * np.maximum(35.0 - x[..., 1], 0.0)


def portfolio_aggregation() -> AggregationSpec:
    """Negative payoff ``-x1 - 2 (x2 - 5)^+ - 3 (35 - x3)^+ - 4 x4``.

    The option legs on ``(x2, x3)`` form the nonlinear block with ``L = sqrt(13)``;
    the linear legs have ``beta = (-1, -4)``. The largest gradient norm is
    ``sqrt(1 + 4 + 9 + 16)``.
    """
    return AggregationSpec(
        n=4,
        m=2,
        nonlinear=_portfolio_options,
        beta=np.array([-1.0, -4.0]),
        a=2.0,
        K=math.sqrt(30.0),
        L=math.sqrt(13.0),
        nonlinear_index=(1, 2),
        linear_index=(0, 3),
    )


def estimate_lipschitz(
    g: Union[AggregationSpec, Callable],
    box: SupportBox,
    samples: int = 2000,
    seed: int = 0,
    a: float = None,
    lattice: float = 2.0 ** -10,
) -> float:
    """Sampled lower estimate of the Lipschitz constant of ``g`` on ``box``.

    Takes the largest of pairwise slopes ``|g(x) - g(y)| / ‖x - y‖_a`` and
    central-difference gradient norms in the dual norm. Points are snapped to
    a dyadic lattice and the difference step equals the lattice spacing, so
    for piecewise-linear ``g`` with small integer coefficients the differences
    are exact away from kinks.
    """
    if samples < 2:
        raise InvalidParameterError("need at least two samples")
    if isinstance(g, AggregationSpec):
        a = g.a if a is None else a
        fn = g.evaluate
    else:
        a = 2.0 if a is None else a
        fn = g
    lo, hi = np.array(box.lo), np.array(box.hi)
    if not (np.all(np.isfinite(lo)) and np.all(np.isfinite(hi))):
        raise InvalidParameterError("the probe box must be bounded")
    b = math.inf if a == 1 else (1.0 if math.isinf(a) else a / (a - 1.0))
    rng = np.random.default_rng(seed)
    pts = lo + (hi - lo) * rng.random((samples, box.dim))
    pts = np.clip(np.round(pts / lattice) * lattice, lo, hi)

    best = 0.0
    perm = rng.permutation(samples)
    x, y = pts, pts[perm]
    dist = np.linalg.norm(x - y, ord=a, axis=1)
    keep = dist > 0
    if np.any(keep):
        best = float(np.max(np.abs(fn(x[keep]) - fn(y[keep])) / dist[keep]))

    grad = np.empty_like(pts)
    for k in range(box.dim):
        step = np.zeros(box.dim)
        step[k] = lattice
        grad[:, k] = (fn(pts + step) - fn(pts - step)) / (2.0 * lattice)
    return max(best, float(np.max(np.linalg.norm(grad, ord=b, axis=1))))
