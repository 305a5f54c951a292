"""Duality risk index for outcome distributions and the index-minimizing portfolio in a complete market."""

from .errors import (
    DomainError,
    DualRiskError,
    Infeasible,
    NonConvergent,
    SchemaError,
)
from .index import IndexResult, alpha_hat, check_properties, duality_index, index_value
from .market import DiscreteKernel, LognormalKernel, entropy
from .numerics import INF, gauss_hermite_rule, lambert_w
from .outcomes import (
    Category,
    ExpTailDiscrete,
    FiniteDiscrete,
    NormalMap,
    affine_exp_map,
    affine_map,
    classify,
    heavy_tail_law,
    mgf_neg,
    moments,
    truncate,
)
from .solver import (
    Feasibility,
    PortfolioSolution,
    ProblemSpec,
    phi,
    risk_curve,
    solve_inner,
    solve_outer,
    solve_portfolio,
    utility_outcome_law,
    y_hat,
)
from .utility import CARA, GenericConcave, Linear, inverse_map

__version__ = "0.1.0"

__all__ = [
    "CARA", "Category", "DiscreteKernel", "DomainError", "DualRiskError", "ExpTailDiscrete",
    "Feasibility", "FiniteDiscrete", "GenericConcave", "INF", "IndexResult", "Infeasible",
    "Linear", "LognormalKernel", "NonConvergent", "NormalMap", "PortfolioSolution", "ProblemSpec",
    "SchemaError", "affine_exp_map", "affine_map", "alpha_hat", "check_properties", "classify",
    "duality_index", "entropy", "heavy_tail_law", "gauss_hermite_rule", "index_value", "inverse_map",
    "lambert_w", "mgf_neg", "moments", "phi", "risk_curve", "solve_inner", "solve_outer",
    "solve_portfolio", "truncate", "utility_outcome_law", "y_hat",
]
