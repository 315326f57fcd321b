"""Continuous regularization of first-kind Fredholm integral equations.

Kernels are compressed by adaptive cross approximation into Chebyshev
function slices, factorised into a singular value expansion, and inverted with
truncated-SVE or Tikhonov regularization whose parameter follows the
discrepancy principle.
"""

__version__ = "0.1.0"

from .bivariate import LowRankKernel, PivotTrace, aca, apply, eval2
from .errors import (
    ChebregError,
    ConfigError,
    DomainMismatch,
    EmptyExpansion,
    NonConvergence,
    NonFinite,
    OutOfDomain,
    OutOfRange,
    RankOverflow,
    UnattainableDiscrepancy,
    UnknownProblem,
    ZeroExactNorm,
    ZeroNoiseNorm,
)
from .funapprox import FuncApprox, Interval, PiecewiseFunc, approximate, evaluate, inner, integrate, norm
from .problems import NoiseSpec, TestProblem, contaminate, make_problem, smooth_noise, smooth_noise_2d
from .regularize import (
    RegularizedSolution,
    RhsProjection,
    Solution2D,
    discrepancy_lambda,
    discrepancy_truncation,
    project_rhs,
    relative_error,
    solve_2d_tikhonov,
    solve_2d_tsve,
    tikhonov_solve,
    tsve_error_bound,
    tsve_solve,
)
from .sve import SveExpansion, compute_sve, reconstruct, sve_from_lowrank

__all__ = [
    "__version__",
    "aca",
    "apply",
    "approximate",
    "ChebregError",
    "compute_sve",
    "ConfigError",
    "contaminate",
    "discrepancy_lambda",
    "discrepancy_truncation",
    "DomainMismatch",
    "EmptyExpansion",
    "eval2",
    "evaluate",
    "FuncApprox",
    "inner",
    "integrate",
    "Interval",
    "LowRankKernel",
    "make_problem",
    "NoiseSpec",
    "NonConvergence",
    "NonFinite",
    "norm",
    "OutOfDomain",
    "OutOfRange",
    "PiecewiseFunc",
    "PivotTrace",
    "project_rhs",
    "RankOverflow",
    "reconstruct",
    "RegularizedSolution",
    "relative_error",
    "RhsProjection",
    "smooth_noise",
    "smooth_noise_2d",
    "Solution2D",
    "solve_2d_tikhonov",
    "solve_2d_tsve",
    "sve_from_lowrank",
    "SveExpansion",
    "TestProblem",
    "tikhonov_solve",
    "tsve_error_bound",
    "tsve_solve",
    "UnattainableDiscrepancy",
    "UnknownProblem",
    "ZeroExactNorm",
    "ZeroNoiseNorm",
]
