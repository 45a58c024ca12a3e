"""Tail simulation of monotone functions of bounded random variables."""

from .baseline import run_standard_mc
from .core import (
    LEFT,
    RIGHT,
    CustomTarget,
    JointModel,
    ProductTarget,
    RejectionStats,
    ReliabilityTarget,
    SumTarget,
    TailSpec,
    TargetFunction,
    TruncatedVariable,
    UniformVariable,
    WeightedPoint,
    negate_target,
    uniform_model,
)
from .equal_scores import build_sampling_tables, draw_equal_score_sample, run_equal_scores
from .estimator import TailCdf, assemble_tail_cdf, merge_tail_cdfs, one_sided_interval, quantile, sup_distance
from .no_rejection import draw_sample, run_tail_simulation, sequential_bounds
from .reduced_rejection import (
    Curvature,
    HyperplaneRegion,
    check_curvature,
    run_reduced_rejection,
    secant_hyperplane,
    tangency_point,
)
from .rng import make_rng

__version__ = "0.1.0"
