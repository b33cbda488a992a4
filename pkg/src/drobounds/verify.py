"""Self-check suites that compare closed forms and solvers against the
brute-force routines on small random instances."""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .bounds import MahalanobisSpec, lipschitz_bound, table1_compare
from .core import (
    AggregationSpec,
    DistortionWeight,
    QuantileGrid,
    linear_aggregation,
    make_es_gamma,
    quadratic,
    quantile_from_samples,
    quartic,
)
from .divergence import DiscreteCloud, SeparableBregman, bregman_wasserstein_1d, discrete_ot_oracle
from .isotonic import isotonic_maxmin_oracle, isotonic_partition_oracle, isotonic_projection
from .witness import construct_witness, verify_inclusion
from .worstcase import solve_lambda, worstcase_brute_oracle


@dataclass(frozen=True)
class Check:
    name: str
    passed: bool
    detail: str

    def line(self, suite: str) -> str:
        status = "PASS" if self.passed else "FAIL"
        return f"suite={suite} check={self.name} status={status} {self.detail}"


def _tally(name: str, errors, tol: float) -> Check:
    errors = np.asarray(errors, dtype=float)
    bad = int(np.sum(~(errors <= tol)))
    return Check(name, bad == 0, f"instances={errors.size} failures={bad} max_error={errors.max():.3e} tol={tol:.0e}")


# instance generators -------------------------------------------------------

def random_array(rng: np.random.Generator, M: int) -> np.ndarray:
    """Noisy trend, sometimes rounded to create ties."""
    y = rng.normal(size=M) * rng.uniform(0.1, 3.0) + np.linspace(0, rng.normal() * 3, M)
    if rng.random() < 0.3:
        y = np.round(y)
    return y


def random_quantile(rng: np.random.Generator, M: int, spread: float = 1.0) -> QuantileGrid:
    return QuantileGrid(np.sort(rng.normal(size=M)) * spread + rng.normal())


def random_weight(rng: np.random.Generator, non_negative=True, non_decreasing=False) -> DistortionWeight:
    k = int(rng.integers(1, 6))
    cuts = np.sort(rng.choice(np.arange(1, 20), size=k - 1, replace=False)) / 20.0
    edges = np.concatenate([[0.0], cuts, [1.0]])
    vals = rng.uniform(0.0 if non_negative else -2.0, 4.0, size=k)
    if non_decreasing:
        vals = np.sort(vals)
    if np.all(vals == 0):
        vals[-1] = 1.0
    return DistortionWeight(tuple(zip(edges[:-1], edges[1:], vals)))


@dataclass(frozen=True)
class ReluNet:
    """One-hidden-layer ReLU map with a certified Lipschitz constant."""

    W: np.ndarray
    bias: np.ndarray
    v: np.ndarray

    def __call__(self, x):
        return np.maximum(np.asarray(x) @ self.W.T + self.bias, 0.0) @ self.v

    @property
    def lipschitz(self) -> float:
        return float(np.linalg.norm(self.W, 2) * np.linalg.norm(self.v, 2))


def random_relu_aggregation(rng: np.random.Generator) -> AggregationSpec:
    m = int(rng.integers(1, 3))
    k = int(rng.integers(1, 3))
    hidden = int(rng.integers(2, 5))
    net = ReluNet(rng.normal(size=(hidden, m)), rng.normal(size=hidden), rng.normal(size=hidden))
    beta = rng.normal(size=k)
    L = net.lipschitz
    return AggregationSpec(n=m + k, m=m, nonlinear=net, beta=beta, a=2.0,
                           K=lipschitz_bound(L, beta, 2.0, m + k), L=L)


def coranked(rng: np.random.Generator, x: np.ndarray, z: np.ndarray) -> np.ndarray:
    """Reorder each column of ``z`` so its ranks match the same column of ``x``."""
    out = np.empty_like(z)
    for k in range(x.shape[1]):
        out[np.argsort(x[:, k], kind="stable"), k] = np.sort(z[:, k])
    return out


def separable_gap(x: np.ndarray, z: np.ndarray, phis) -> float:
    """Multivariate separable divergence minus the sum of 1-D divergences."""
    multi = discrete_ot_oracle(DiscreteCloud(z), DiscreteCloud(x), SeparableBregman(phis))
    M = 2 * x.shape[0]
    parts = [
        bregman_wasserstein_1d(quantile_from_samples(z[:, k], M), quantile_from_samples(x[:, k], M), phi)
        for k, phi in enumerate(phis)
    ]
    return multi - math.fsum(parts)


def _random_generators(rng, n):
    return [quartic() if rng.random() < 0.5 else quadratic(float(rng.uniform(0.5, 2.0))) for _ in range(n)]


def full_budget_targets(rng, gx: np.ndarray, reach: float) -> np.ndarray:
    """Targets whose sorted order matches ``gx`` and whose L2 distance is ``reach``."""
    shift = np.sort(rng.normal(size=gx.size))
    shift[np.argsort(gx, kind="stable")] = shift.copy()
    if rng.random() < 0.5 or not np.any(shift):
        shift = np.ones_like(shift)
    return gx + shift * (reach / math.sqrt(np.mean(shift ** 2)))


# suites --------------------------------------------------------------------

def suite_isotonic(rng, count=100):
    maxmin, partition, props = [], [], {k: [] for k in
                                         ("scaling", "shift", "block_means", "ordering", "orthogonality", "dual")}
    for _ in range(count):
        y = random_array(rng, int(rng.integers(1, 200)))
        maxmin.append(np.max(np.abs(isotonic_projection(y)[0] - isotonic_maxmin_oracle(y))))
        y = random_array(rng, int(rng.integers(1, 11)))
        partition.append(np.max(np.abs(isotonic_projection(y)[0] - isotonic_partition_oracle(y))))
        for name, err in property_errors(rng, random_array(rng, int(rng.integers(2, 300)))).items():
            props[name].append(err)
    checks = [_tally("pava_vs_maxmin", maxmin, 1e-9), _tally("pava_vs_partition", partition, 1e-9)]
    checks += [_tally(name, errs, 1e-9) for name, errs in props.items()]
    return checks


def property_errors(rng, y: np.ndarray) -> dict:
    """Violation size of each structural property of the projection on ``y``.

    Orthogonality and the dual inequality are scaled by ``M`` so the same
    1e-9 threshold applies.
    """
    M = y.size
    iso, blocks = isotonic_projection(y)
    scale = 1.0 + np.max(np.abs(y))
    k = rng.uniform(0, 5)
    c = rng.normal() * 10
    errs = {
        "scaling": np.max(np.abs(isotonic_projection(k * y)[0] - k * iso)) / scale,
        "shift": np.max(np.abs(isotonic_projection(y + c)[0] - (iso + c))) / (scale + abs(c)),
    }
    thetas = [t for _, _, t in blocks.blocks]
    means_err = max(abs(t - np.mean(y[s:e + 1])) for s, e, t in blocks.blocks) / scale
    strict = all(a < b for a, b in zip(thetas, thetas[1:]))
    errs["block_means"] = means_err if strict else np.inf
    lower = y - rng.uniform(0, 1, size=M)
    errs["ordering"] = max(0.0, float(np.max(isotonic_projection(lower)[0] - iso)))
    levels = np.sort(rng.normal(size=4))
    psi = np.searchsorted(levels, iso) * rng.normal()
    errs["orthogonality"] = abs(float(np.dot(y - iso, psi))) / (M * scale)
    f = np.sort(rng.normal(size=M))
    errs["dual"] = max(0.0, float(np.dot(y - iso, f))) / (M * scale)
    return errs


def suite_separability(rng, count=100):
    """The multivariate divergence never falls below the sum of marginal ones,
    and equals it when both clouds share the same coordinate ranks."""
    lower_gap, equal_gap = [], []
    for _ in range(count):
        n = int(rng.integers(2, 4))
        N = int(rng.integers(1, 7))
        phis = _random_generators(rng, n)
        x = rng.normal(size=(N, n))
        z = rng.normal(size=(N, n))
        lower_gap.append(max(0.0, -separable_gap(x, z, phis)))
        equal_gap.append(abs(separable_gap(x, coranked(rng, x, z), phis)))
    return [_tally("multivariate_at_least_marginal_sum", lower_gap, 1e-8),
            _tally("identity_on_coranked_clouds", equal_gap, 1e-8)]


def suite_inclusion(rng, count=50):
    exact, image, implication, two_sided = [], [], [], []
    for _ in range(count):
        agg = random_relu_aggregation(rng)
        N = int(rng.integers(1, 7))
        eps = float(rng.uniform(0.1, 2.0))
        x = DiscreteCloud(rng.normal(size=(N, agg.n)))
        gx = agg.evaluate(x.points)
        z = full_budget_targets(rng, gx, agg.beta_norm * eps)
        w = construct_witness(x, agg, z, eps)
        exact.append(np.max(np.abs(agg.evaluate(w.points) - z) / (1.0 + np.abs(z))))
        verdict = verify_inclusion(x, w, agg, eps)
        image.append(max(0.0, verdict.univariate_distance - agg.K * eps))
        moved = DiscreteCloud(x.points + rng.normal(size=x.points.shape) * rng.uniform(0.01, 1.0))
        v2 = verify_inclusion(x, moved, agg, verdict.multivariate_distance + 1.0)
        implication.append(max(0.0, v2.univariate_distance - agg.K * v2.multivariate_distance))

        lin = linear_aggregation(rng.normal(size=agg.n))
        gl = lin.evaluate(x.points)
        zl = full_budget_targets(rng, gl, lin.beta_norm * eps)
        vl = verify_inclusion(x, construct_witness(x, lin, zl, eps), lin, eps)
        two_sided.append(max(lin.beta_norm * eps - vl.univariate_distance,
                             vl.univariate_distance - lin.K * eps, 0.0))
    return [_tally("witness_hits_targets", exact, 1e-12),
            _tally("witness_image_within_K_eps", image, 1e-9),
            _tally("image_distance_at_most_K_times_distance", implication, 1e-9),
            _tally("linear_two_sided", two_sided, 1e-9)]


def suite_oracle_worstcase(rng, count=8):
    errs = []
    for _ in range(count):
        f = random_quantile(rng, 40)
        gamma = random_weight(rng)
        phi = quartic() if rng.random() < 0.5 else quadratic(1.0)
        eps = float(rng.uniform(0.05, 1.0))
        worst = solve_lambda(f, gamma, phi, eps).worst_risk
        best = worstcase_brute_oracle(f, gamma, phi, eps, starts=5, seed=int(rng.integers(2 ** 31)))
        errs.append(abs(worst - best) / (1.0 + abs(worst)))
    return [_tally("solver_matches_direct_maximisation", errs, 5e-3)]


def suite_table1(rng, count=30):
    ordering, identity = [], []
    for _ in range(count):
        n = int(rng.integers(1, 5))
        beta = rng.uniform(0, 3, size=n)
        agg = linear_aggregation(beta)
        M = 200
        x = rng.normal(size=(500, n)) * rng.uniform(0.5, 2, size=n)
        marginals = [quantile_from_samples(x[:, k], M) for k in range(n)]
        f_agg = quantile_from_samples(x @ beta, M)
        gamma = random_weight(rng, non_decreasing=True)
        eps = float(rng.uniform(0.05, 2.0))
        try:
            table = table1_compare(agg, gamma, marginals, f_agg, eps, MahalanobisSpec(np.ones(n)))
            ordering.append(0.0)
        except Exception:  # noqa: BLE001 - any failure counts against the check
            ordering.append(np.inf)
            continue
        t = table.as_dict()
        identity.append(max(abs(t["mahalanobis_direct_lower"] - t["wasserstein_direct_lower"]),
                            abs(t["mahalanobis_direct_upper"] - t["wasserstein_direct_upper"])))
    return [_tally("ordering_chain", ordering, 0.0),
            _tally("identity_weighting_matches_wasserstein", identity or [0.0], 1e-9)]


SUITES = {
    "isotonic": suite_isotonic,
    "separability": suite_separability,
    "inclusion": suite_inclusion,
    "oracle-worstcase": suite_oracle_worstcase,
    "table1": suite_table1,
}


def run_suite(name: str, seed: int = 0):
    return SUITES[name](np.random.default_rng(seed))
