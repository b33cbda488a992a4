"""Univariate Wasserstein and Bregman-Wasserstein divergences on quantile
grids, and an exhaustive assignment solver for small multivariate clouds."""
from __future__ import annotations

import itertools
from dataclasses import dataclass
from typing import Sequence

import numpy as np

from .core import BregmanGenerator, QuantileGrid
from .errors import CapacityError, InvalidParameterError

OT_ORACLE_MAX_N = 9


def _same_resolution(f: QuantileGrid, g: QuantileGrid):
    if f.M != g.M:
        raise InvalidParameterError(f"grid resolutions differ: {f.M} vs {g.M}")


def wasserstein_1d(f: QuantileGrid, g: QuantileGrid, p: float = 2.0) -> float:
    """``((1/M) sum_j |f_j - g_j|^p)^(1/p)`` under the comonotonic coupling."""
    _same_resolution(f, g)
    if not p >= 1:
        raise InvalidParameterError("Wasserstein order must be >= 1")
    d = np.abs(f.values - g.values)
    return float(np.mean(d ** p) ** (1.0 / p))


def bregman_wasserstein_1d(f: QuantileGrid, g: QuantileGrid, phi: BregmanGenerator) -> float:
    """Average pointwise Bregman divergence; ``f`` is perturbed, ``g`` the reference."""
    _same_resolution(f, g)
    return float(np.mean(phi.pointwise(f.values, g.values)))


@dataclass(frozen=True, eq=False)
class DiscreteCloud:
    """Uniformly weighted point cloud of ``N`` points in ``R^n``."""

    points: np.ndarray

    def __post_init__(self):
        pts = np.array(self.points, dtype=float, copy=True)
        if pts.ndim == 1:
            pts = pts[:, None]
        if pts.ndim != 2 or pts.shape[0] < 1 or pts.shape[1] < 1:
            raise InvalidParameterError("a cloud needs shape (N, n) with N, n >= 1")
        if not np.all(np.isfinite(pts)):
            raise InvalidParameterError("cloud coordinates must be finite")
        pts.setflags(write=False)
        object.__setattr__(self, "points", pts)

    @property
    def N(self) -> int:
        return self.points.shape[0]

    @property
    def n(self) -> int:
        return self.points.shape[1]


@dataclass(frozen=True)
class NormPower:
    """Ground cost ``‖x - y‖_a^p``; the oracle reports the ``1/p`` root."""

    a: float = 2.0
    p: float = 2.0

    def matrix(self, x, y):
        diff = x[:, None, :] - y[None, :, :]
        return np.linalg.norm(diff, ord=self.a, axis=2) ** self.p

    def finish(self, avg):
        return avg ** (1.0 / self.p)


@dataclass(frozen=True, eq=False)
class SeparableBregman:
    """Ground cost ``sum_k B_{phi_k}(x_k, y_k)`` with ``x`` the perturbed point."""

    phis: Sequence[BregmanGenerator]

    def matrix(self, x, y):
        if len(self.phis) != x.shape[1]:
            raise InvalidParameterError("need one generator per coordinate")
        total = np.zeros((x.shape[0], y.shape[0]))
        for k, phi in enumerate(self.phis):
            total += phi.pointwise(x[:, None, k], y[None, :, k])
        return total

    def finish(self, avg):
        return avg


@dataclass(frozen=True, eq=False)
class MahalanobisDiag:
    """Ground cost ``(x - y)^T diag(q) (x - y)``."""

    q_diag: np.ndarray

    def matrix(self, x, y):
        q = np.asarray(self.q_diag, dtype=float)
        diff = x[:, None, :] - y[None, :, :]
        return np.einsum("ijk,k->ij", diff * diff, q)

    def finish(self, avg):
        return avg


def discrete_ot_oracle(x: DiscreteCloud, y: DiscreteCloud, cost) -> float:
    """Optimal transport between equal-size uniform clouds by trying every assignment.

    With equal weights ``1/N`` an optimal plan is a permutation, so the
    minimum over all ``N!`` bijections is exact.
    """
    if x.N != y.N:
        raise InvalidParameterError(f"cloud sizes differ: {x.N} vs {y.N}")
    if x.n != y.n:
        raise InvalidParameterError(f"cloud dimensions differ: {x.n} vs {y.n}")
    N = x.N
    if N > OT_ORACLE_MAX_N:
        raise CapacityError(f"assignment enumeration supports N <= {OT_ORACLE_MAX_N}, got {N}")
    C = cost.matrix(x.points, y.points)
    perms = np.array(list(itertools.permutations(range(N))), dtype=np.intp)
    totals = C[np.arange(N), perms].sum(axis=1)
    return float(cost.finish(totals.min() / N))
