"""Projection onto non-decreasing sequences (uniform weights) and two
brute-force cross-checks."""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import CapacityError, InvalidParameterError

PARTITION_ORACLE_MAX_M = 14


@dataclass(frozen=True)
class BlockDecomposition:
    """Consecutive blocks ``(start, end, theta)`` with inclusive 0-based ends
    and strictly increasing ``theta``."""

    blocks: tuple

    def expand(self) -> np.ndarray:
        out = np.empty(self.blocks[-1][1] + 1 if self.blocks else 0)
        for start, end, theta in self.blocks:
            out[start:end + 1] = theta
        return out


def isotonic_projection(l) -> tuple[np.ndarray, BlockDecomposition]:
    """Pool-adjacent-violators projection onto the non-decreasing cone.

    Blocks are pooled only on a strict violation; adjacent blocks that end up
    with equal means are merged afterwards so that block values are strictly
    increasing.

    Parameters
    ----------
    l : array_like
        Finite one-dimensional input.

    Returns
    -------
    projected : ndarray
    decomposition : BlockDecomposition
    """
    y = np.asarray(l, dtype=float).ravel()
    if not np.all(np.isfinite(y)):
        raise InvalidParameterError("isotonic projection needs finite input")
    if y.size == 0:
        return y.copy(), BlockDecomposition(())

    sums: list[float] = []
    counts: list[int] = []
    means: list[float] = []
    for v in y.tolist():
        s, c, mu = v, 1, v
        while means and means[-1] > mu:
            s += sums.pop()
            c += counts.pop()
            means.pop()
            mu = s / c
        sums.append(s)
        counts.append(c)
        means.append(mu)

    blocks = []
    start = 0
    for s, c, mu in zip(sums, counts, means):
        if blocks and blocks[-1][2] == mu:
            # equal-mean neighbours: merged block keeps the same mean
            blocks[-1] = (blocks[-1][0], start + c - 1, mu)
        else:
            blocks.append((start, start + c - 1, mu))
        start += c

    out = np.repeat(np.array(means), np.array(counts))
    return out, BlockDecomposition(tuple(blocks))


def isotonic(l) -> np.ndarray:
    return isotonic_projection(l)[0]


def isotonic_maxmin_oracle(l) -> np.ndarray:
    """``out[i] = max_{j <= i} min_{k >= i} mean(l[j..k])``, vectorised in O(M^2)."""
    y = np.asarray(l, dtype=float).ravel()
    M = y.size
    csum = np.concatenate([[0.0], np.cumsum(y)])
    j = np.arange(M)[:, None]
    k = np.arange(M)[None, :]
    with np.errstate(divide="ignore", invalid="ignore"):
        means = (csum[k + 1] - csum[j]) / (k - j + 1)
    means = np.where(k >= j, means, np.inf)
    # suffix minimum along k: smin[j, i] = min_{k >= i} means[j, k]
    smin = np.minimum.accumulate(means[:, ::-1], axis=1)[:, ::-1]
    smin = np.where(k >= j, smin, -np.inf)
    return smin.max(axis=0)


def isotonic_partition_oracle(l) -> np.ndarray:
    """Best feasible piecewise-constant fit over all consecutive-block partitions.

    Enumerates the ``2^(M-1)`` cut patterns, keeps those whose block means are
    non-decreasing and returns the one with the least squared error.
    """
    y = np.asarray(l, dtype=float).ravel()
    M = y.size
    if M > PARTITION_ORACLE_MAX_M:
        raise CapacityError(f"partition enumeration supports M <= {PARTITION_ORACLE_MAX_M}, got {M}")
    if M == 0:
        return y.copy()
    csum = np.concatenate([[0.0], np.cumsum(y)])
    best_err, best_fit = np.inf, None
    for mask in range(1 << (M - 1)):
        cuts = [0] + [i + 1 for i in range(M - 1) if mask >> i & 1] + [M]
        prev = -np.inf
        fit = np.empty(M)
        feasible = True
        for s, e in zip(cuts, cuts[1:]):
            mu = (csum[e] - csum[s]) / (e - s)
            if mu < prev:
                feasible = False
                break
            fit[s:e] = mu
            prev = mu
        if not feasible:
            continue
        err = float(np.sum((fit - y) ** 2))
        if err < best_err:
            best_err, best_fit = err, fit
    return best_fit
