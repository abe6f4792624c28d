"""Constrained tree-structured Parzen estimation with an ask-tell interface,
toy benchmarks, an experiment harness, and an HTTP service."""

__version__ = "0.1.0"

from .acquisition import (
    AcquisitionComponent,
    ScoredCandidate,
    density_ratio,
    eci_log_score,
    naive_log_score,
    relative_density_ratio,
    select_candidate,
)
from .benchmarks import (
    ToyProblem,
    get_problem,
    grid_oracle,
    problem_names,
    threshold_for_quantile,
)
from .kde import Kde, aitchison_aitken, bandwidth_normal_reference
from .optimizer import ControlParams, Optimizer, Proposal
from .space import Config, ParamDomain, SearchSpace
from .split import (
    ConstraintSpec,
    Observation,
    SplitResult,
    is_feasible,
    split_constraint,
    split_constraint_hard,
    split_objective_feasible,
    split_objective_vanilla,
)
from .stats import (
    RunRecord,
    absolute_percentage_loss,
    average_rank,
    wilcoxon_signed_rank,
    wins_loses_ties,
)

__all__ = [
    "AcquisitionComponent",
    "Config",
    "ConstraintSpec",
    "ControlParams",
    "Kde",
    "Observation",
    "Optimizer",
    "ParamDomain",
    "Proposal",
    "RunRecord",
    "ScoredCandidate",
    "SearchSpace",
    "SplitResult",
    "ToyProblem",
    "absolute_percentage_loss",
    "aitchison_aitken",
    "average_rank",
    "bandwidth_normal_reference",
    "density_ratio",
    "eci_log_score",
    "get_problem",
    "grid_oracle",
    "is_feasible",
    "naive_log_score",
    "problem_names",
    "relative_density_ratio",
    "select_candidate",
    "split_constraint",
    "split_constraint_hard",
    "split_objective_feasible",
    "split_objective_vanilla",
    "threshold_for_quantile",
    "wilcoxon_signed_rank",
    "wins_loses_ties",
]
