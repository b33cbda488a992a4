"""Domain types for quantile grids, distortion weights, Bregman generators and
aggregation maps, plus the signed Choquet integral on a grid.

All quantile functions live on the uniform midpoint grid
``u_j = (2j - 1) / (2M)``, ``j = 1..M``, which never touches 0 or 1.
"""
from __future__ import annotations

import enum
import math
from dataclasses import dataclass, field
from typing import Callable, Optional, Sequence

import numpy as np

from .errors import InvalidParameterError

DEFAULT_M = 10_000

_PROBE = np.concatenate([-np.logspace(3, -3, 25), [0.0], np.logspace(-3, 3, 25)])


def midpoints(M: int) -> np.ndarray:
    """Return the midpoint grid ``(2j - 1) / (2M)`` for ``j = 1..M``."""
    if int(M) != M or M < 1:
        raise InvalidParameterError(f"grid resolution must be a positive integer, got {M!r}")
    M = int(M)
    return (2.0 * np.arange(1, M + 1) - 1.0) / (2.0 * M)


def _readonly(values) -> np.ndarray:
    arr = np.array(values, dtype=float, copy=True)
    arr.setflags(write=False)
    return arr


@dataclass(frozen=True, eq=False)
class QuantileGrid:
    """A non-decreasing quantile function sampled at the grid midpoints.

    Monotonicity is checked exactly; a non-monotone input is rejected rather
    than sorted so that upstream mistakes surface here.
    """

    values: np.ndarray

    def __post_init__(self):
        arr = _readonly(self.values)
        if arr.ndim != 1:
            raise InvalidParameterError("quantile values must be one-dimensional")
        if arr.size < 2:
            raise InvalidParameterError("a quantile grid needs at least two cells")
        if not np.all(np.isfinite(arr)):
            raise InvalidParameterError("quantile values must be finite")
        if np.any(np.diff(arr) < 0):
            raise InvalidParameterError("quantile values must be non-decreasing")
        object.__setattr__(self, "values", arr)

    @property
    def M(self) -> int:
        return int(self.values.size)

    @property
    def u(self) -> np.ndarray:
        return midpoints(self.M)

    @classmethod
    def from_ppf(cls, ppf: Callable[[np.ndarray], np.ndarray], M: int = DEFAULT_M) -> "QuantileGrid":
        """Sample a vectorised quantile function at the midpoints."""
        return cls(np.asarray(ppf(midpoints(M)), dtype=float))

    def shifted(self, delta) -> "QuantileGrid":
        return QuantileGrid(self.values + np.asarray(delta, dtype=float))

    def __len__(self) -> int:
        return self.M


def quantile_from_samples(samples, M: int = DEFAULT_M) -> QuantileGrid:
    """Left-continuous empirical quantile on the midpoint grid.

    ``values[j]`` is the order statistic ``X_(ceil(u_j N))``. The ceiling is
    taken in integer arithmetic so that no midpoint is misrounded.

    Parameters
    ----------
    samples : array_like
        One-dimensional finite sample.
    M : int
        Grid resolution.

    Returns
    -------
    QuantileGrid
    """
    x = np.asarray(samples, dtype=float).ravel()
    if x.size == 0:
        raise InvalidParameterError("cannot build a quantile grid from an empty sample")
    if not np.all(np.isfinite(x)):
        raise InvalidParameterError("samples must be finite")
    midpoints(M)  # validates M
    N = x.size
    j = np.arange(1, int(M) + 1, dtype=np.int64)
    num = (2 * j - 1) * N
    rank = -(-num // (2 * int(M)))  # ceil((2j-1)N / 2M), 1-based
    return QuantileGrid(np.sort(x)[rank - 1])


@dataclass(frozen=True, eq=False)
class DistortionWeight:
    """Piecewise-constant distortion weight on ``[0, 1]``.

    Segment ``(lo, hi, value)`` applies on ``(lo, hi]``; the first segment also
    owns ``u = 0``. Grid midpoints never hit breakpoints that are multiples of
    ``1/M``, so the convention only matters for off-grid evaluation.
    """

    segments: tuple
    is_non_decreasing: bool = field(init=False)
    is_non_negative: bool = field(init=False)

    def __post_init__(self):
        segs = tuple((float(lo), float(hi), float(v)) for lo, hi, v in self.segments)
        if not segs:
            raise InvalidParameterError("a distortion weight needs at least one segment")
        if segs[0][0] != 0.0 or segs[-1][1] != 1.0:
            raise InvalidParameterError("segments must start at 0 and end at 1")
        for (lo, hi, v), nxt in zip(segs, segs[1:] + (None,)):
            if not (lo < hi):
                raise InvalidParameterError(f"segment ({lo}, {hi}) is empty or reversed")
            if not math.isfinite(v):
                raise InvalidParameterError("segment values must be finite")
            if nxt is not None and nxt[0] != hi:
                raise InvalidParameterError(f"gap or overlap between {hi} and {nxt[0]}")
        values = [v for _, _, v in segs]
        if all(v == 0.0 for v in values):
            raise InvalidParameterError("distortion weight must not vanish identically")
        object.__setattr__(self, "segments", segs)
        object.__setattr__(self, "is_non_decreasing", all(a <= b for a, b in zip(values, values[1:])))
        object.__setattr__(self, "is_non_negative", all(v >= 0.0 for v in values))
        self._check_flags()

    def _check_flags(self):
        g = self(midpoints(997))
        if self.is_non_decreasing and np.any(np.diff(g) < 0):
            raise InvalidParameterError("monotonicity flag inconsistent with evaluated weight")
        if self.is_non_negative and np.any(g < 0):
            raise InvalidParameterError("sign flag inconsistent with evaluated weight")

    @property
    def breakpoints(self) -> np.ndarray:
        return np.array([self.segments[0][0]] + [hi for _, hi, _ in self.segments])

    @property
    def l2_norm_sq(self) -> float:
        return math.fsum(v * v * (hi - lo) for lo, hi, v in self.segments)

    @property
    def l2_norm(self) -> float:
        return math.sqrt(self.l2_norm_sq)

    @property
    def integral(self) -> float:
        return math.fsum(v * (hi - lo) for lo, hi, v in self.segments)

    def __call__(self, u) -> np.ndarray:
        u = np.asarray(u, dtype=float)
        vals = np.array([v for _, _, v in self.segments])
        idx = np.searchsorted(self.breakpoints, u, side="left") - 1
        return vals[np.clip(idx, 0, len(vals) - 1)]

    def on_grid(self, M: int) -> np.ndarray:
        return self(midpoints(M))


def make_es_gamma(alpha: float) -> DistortionWeight:
    """Expected Shortfall weight: ``1/(1-alpha)`` on ``(alpha, 1]``."""
    if not 0.0 < alpha < 1.0:
        raise InvalidParameterError(f"ES level must lie in (0, 1), got {alpha}")
    return DistortionWeight(((0.0, alpha, 0.0), (alpha, 1.0, 1.0 / (1.0 - alpha))))


def make_ier_gamma(alpha: float) -> DistortionWeight:
    """Inter-ES range weight: upper-tail ES minus lower-tail average."""
    if not 0.5 < alpha < 1.0:
        raise InvalidParameterError(f"IER level must lie in (0.5, 1), got {alpha}")
    w = 1.0 / (1.0 - alpha)
    return DistortionWeight(((0.0, 1.0 - alpha, -w), (1.0 - alpha, alpha, 0.0), (alpha, 1.0, w)))


def make_piecewise_gamma(segments: Sequence) -> DistortionWeight:
    return DistortionWeight(tuple(tuple(s) for s in segments))


INVERSE_S_SEGMENTS = ((0.0, 0.2, 3.0), (0.2, 0.4, 1.5), (0.4, 0.6, 0.0), (0.6, 0.8, 3.0), (0.8, 1.0, 4.5))


def choquet_integral(q: QuantileGrid, gamma: DistortionWeight) -> float:
    """Midpoint-rule signed Choquet integral ``(1/M) sum_j gamma(u_j) q_j``."""
    return float(np.dot(gamma.on_grid(q.M), q.values) / q.M)


class GeneratorKind(str, enum.Enum):
    QUADRATIC = "quadratic"
    QUARTIC = "quartic"
    CUSTOM = "custom"


@dataclass(frozen=True, eq=False)
class BregmanGenerator:
    """Strictly convex generator with its derivative and derivative inverse.

    ``divergence`` may supply a cancellation-free pointwise Bregman divergence;
    otherwise the textbook formula is used. ``inverse_lipschitz`` is the
    Lipschitz constant of ``phi_prime_inverse`` when one exists.
    """

    phi: Callable
    phi_prime: Callable
    phi_prime_inverse: Callable
    kind: GeneratorKind = GeneratorKind.CUSTOM
    scale: Optional[float] = None
    domain: tuple = (-math.inf, math.inf)
    divergence: Optional[Callable] = None
    inverse_lipschitz: Optional[float] = None

    def __post_init__(self):
        lo, hi = self.domain
        probe = _PROBE[(_PROBE > lo) & (_PROBE < hi)]
        if probe.size < 3:
            probe = np.linspace(lo, hi, 53)[1:-1]
        d = np.asarray(self.phi_prime(probe), dtype=float)
        if not np.all(np.diff(d) > 0):
            raise InvalidParameterError("phi_prime must be strictly increasing")
        back = np.asarray(self.phi_prime_inverse(d), dtype=float)
        if not np.allclose(back, probe, rtol=1e-10, atol=1e-10):
            raise InvalidParameterError("phi_prime_inverse does not invert phi_prime")

    @property
    def is_quadratic(self) -> bool:
        return self.kind is GeneratorKind.QUADRATIC

    def pointwise(self, x, y) -> np.ndarray:
        """Bregman divergence ``phi(x) - phi(y) - phi'(y)(x - y)``, elementwise."""
        x = np.asarray(x, dtype=float)
        y = np.asarray(y, dtype=float)
        if self.divergence is not None:
            return self.divergence(x, y)
        return self.phi(x) - self.phi(y) - self.phi_prime(y) * (x - y)


def quadratic(c: float = 1.0) -> BregmanGenerator:
    """``phi(x) = c x^2``; its BW divergence is ``c`` times squared 2-Wasserstein."""
    if not c > 0:
        raise InvalidParameterError(f"quadratic scale must be positive, got {c}")
    c = float(c)
    return BregmanGenerator(
        phi=lambda x: c * np.square(x),
        phi_prime=lambda x: 2.0 * c * np.asarray(x),
        phi_prime_inverse=lambda y: np.asarray(y) / (2.0 * c),
        kind=GeneratorKind.QUADRATIC,
        scale=c,
        divergence=lambda x, y: c * np.square(x - y),
        inverse_lipschitz=1.0 / (2.0 * c),
    )


def quartic() -> BregmanGenerator:
    """``phi(x) = x^4``."""
    return BregmanGenerator(
        phi=lambda x: np.asarray(x) ** 4,
        phi_prime=lambda x: 4.0 * np.asarray(x) ** 3,
        phi_prime_inverse=lambda y: np.cbrt(np.asarray(y) / 4.0),
        kind=GeneratorKind.QUARTIC,
        # (x - y)^2 (x^2 + 2xy + 3y^2) avoids cancelling large fourth powers
        divergence=lambda x, y: np.square(x - y) * (x * x + 2.0 * x * y + 3.0 * y * y),
    )


def _dual_exponent(a: float) -> float:
    if a == 1:
        return math.inf
    if math.isinf(a):
        return 1.0
    return a / (a - 1.0)


def vector_norm(v, order: float) -> float:
    v = np.asarray(v, dtype=float)
    if v.size == 0:
        return 0.0
    return float(np.linalg.norm(v, ord=order))


@dataclass(frozen=True, eq=False)
class AggregationSpec:
    """Aggregation ``g(x) = nonlinear(x[nonlinear_index]) + beta . x[linear_index]``.

    By default the nonlinear block is the first ``m`` coordinates.

    Parameters
    ----------
    n : int
        Total dimension.
    m : int
        Size of the nonlinear block.
    nonlinear : callable or None
        Maps an ``(..., m)`` array to ``(...)``. Ignored when ``m == 0``.
    beta : array_like
        Coefficients of the linear block, length ``n - m``.
    a : float
        Norm exponent on inputs.
    K : float, optional
        Lipschitz constant of ``g`` w.r.t. the ``a``-norm. Defaults to
        ``‖beta‖_b`` when ``m == 0``; required otherwise.
    L : float
        Lipschitz constant of the nonlinear part.
    """

    n: int
    m: int
    nonlinear: Optional[Callable]
    beta: np.ndarray
    a: float = 2.0
    K: Optional[float] = None
    L: float = 0.0
    nonlinear_index: Optional[tuple] = None
    linear_index: Optional[tuple] = None

    def __post_init__(self):
        if not 0 <= self.m <= self.n or self.n < 1:
            raise InvalidParameterError(f"need 0 <= m <= n and n >= 1, got m={self.m}, n={self.n}")
        beta = _readonly(self.beta).ravel()
        if beta.size != self.n - self.m:
            raise InvalidParameterError(f"beta must have length n - m = {self.n - self.m}")
        if not self.a >= 1:
            raise InvalidParameterError("norm exponent a must be >= 1")
        if self.m > 0 and self.nonlinear is None:
            raise InvalidParameterError("nonlinear block requires a callable")
        nl = tuple(range(self.m)) if self.nonlinear_index is None else tuple(int(i) for i in self.nonlinear_index)
        li = tuple(range(self.m, self.n)) if self.linear_index is None else tuple(int(i) for i in self.linear_index)
        if len(nl) != self.m or len(li) != self.n - self.m or sorted(nl + li) != list(range(self.n)):
            raise InvalidParameterError("nonlinear and linear indices must partition the coordinates")
        object.__setattr__(self, "beta", beta)
        object.__setattr__(self, "nonlinear_index", nl)
        object.__setattr__(self, "linear_index", li)
        bn = self.beta_norm
        K = self.K
        if K is None:
            if self.m > 0:
                raise InvalidParameterError("K must be supplied when a nonlinear block is present")
            K = bn
        K = float(K)
        if K < bn * (1.0 - 1e-12):
            raise InvalidParameterError(f"K = {K} is below ||beta||_b = {bn}")
        object.__setattr__(self, "K", K)

    @property
    def b(self) -> float:
        return _dual_exponent(self.a)

    @property
    def beta_norm(self) -> float:
        return vector_norm(self.beta, self.b)

    def split(self, x):
        x = np.asarray(x, dtype=float)
        return x[..., list(self.nonlinear_index)], x[..., list(self.linear_index)]

    def evaluate(self, x) -> np.ndarray:
        """Evaluate ``g`` on a point ``(n,)`` or a batch ``(N, n)``."""
        x = np.asarray(x, dtype=float)
        if x.shape[-1] != self.n:
            raise InvalidParameterError(f"expected trailing dimension {self.n}, got {x.shape}")
        x1, x2 = self.split(x)
        out = x2 @ self.beta if self.beta.size else np.zeros(x.shape[:-1])
        if self.m > 0:
            out = out + np.asarray(self.nonlinear(x1), dtype=float)
        return out

    __call__ = evaluate


def linear_aggregation(beta, a: float = 2.0) -> AggregationSpec:
    beta = np.asarray(beta, dtype=float).ravel()
    return AggregationSpec(n=beta.size, m=0, nonlinear=None, beta=beta, a=a)


class Method(str, enum.Enum):
    WASSERSTEIN_LIPSCHITZ_I = "wasserstein_lipschitz_i"
    WASSERSTEIN_LIPSCHITZ_II = "wasserstein_lipschitz_ii"
    SEPARABLE_BREGMAN = "separable_bregman"
    MAHALANOBIS_I = "mahalanobis_i"
    MAHALANOBIS_II = "mahalanobis_ii"
    COMPOSABLE_UPPER_ONLY = "composable_upper_only"


@dataclass(frozen=True, eq=False)
class BoundReport:
    """Lower and upper worst-case risk bounds with their attaining curves.

    ``units`` states how the tolerance was read: a Wasserstein radius or a
    divergence budget. Multipliers are per-component tuples for the
    separable method.
    """

    reference_risk: float
    lower: float
    upper: float
    method: Method
    epsilon: float
    units: str
    lower_lambda: object = None
    upper_lambda: object = None
    lower_curve: Optional[QuantileGrid] = None
    upper_curve: Optional[QuantileGrid] = None
    upper_pre_projection: Optional[np.ndarray] = None

    def __post_init__(self):
        if self.lower > self.upper + 1e-9 * max(1.0, abs(self.upper)):
            raise InvalidParameterError(f"lower bound {self.lower} exceeds upper bound {self.upper}")

    def summary(self) -> dict:
        return {
            "method": self.method.value,
            "units": self.units,
            "epsilon": self.epsilon,
            "reference_risk": self.reference_risk,
            "lower": self.lower,
            "upper": self.upper,
            "lower_lambda": self.lower_lambda,
            "upper_lambda": self.upper_lambda,
        }
