"""Worst-case risk bounds for aggregated positions under Wasserstein and
Bregman-Wasserstein distributional uncertainty."""
from .bounds import (
    MahalanobisSpec,
    Table1Report,
    composable_upper_bound,
    lipschitz_bound,
    mahalanobis_bounds,
    separable_bregman_bounds,
    separable_gap_bound,
    table1_compare,
    wasserstein_bounds,
)
from .core import (
    INVERSE_S_SEGMENTS,
    AggregationSpec,
    BoundReport,
    BregmanGenerator,
    DistortionWeight,
    Method,
    QuantileGrid,
    choquet_integral,
    linear_aggregation,
    make_es_gamma,
    make_ier_gamma,
    make_piecewise_gamma,
    midpoints,
    quadratic,
    quantile_from_samples,
    quartic,
)
from .divergence import (
    DiscreteCloud,
    MahalanobisDiag,
    NormPower,
    SeparableBregman,
    bregman_wasserstein_1d,
    discrete_ot_oracle,
    wasserstein_1d,
)
from .errors import (
    AssumptionError,
    CapacityError,
    ConsistencyError,
    DroBoundsError,
    InfeasibleTargetError,
    InvalidParameterError,
    NoSolutionError,
    NoWitnessError,
    UnsupportedDistortionError,
)
from .isotonic import BlockDecomposition, isotonic_maxmin_oracle, isotonic_partition_oracle, isotonic_projection
from .sampling import (
    Independent,
    LogNormal,
    Normal,
    ReferenceModel,
    StudentT,
    Weibull,
    estimate_lipschitz,
    portfolio_aggregation,
    portfolio_model,
    sample_reference,
)
from .witness import InclusionVerdict, SupportBox, construct_witness, verify_inclusion
from .worstcase import SolveReport, WeightCase, candidate_quantile, solve_lambda, worstcase_brute_oracle

__version__ = "0.1.0"
