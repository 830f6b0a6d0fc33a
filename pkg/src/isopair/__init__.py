"""Weighted least squares fitting of two nondecreasing curves, one below the other.

Given responses y and z observed on a common grid, the package estimates
nondecreasing vectors a and b minimizing the weighted squared error subject to
a_j <= b_j at every point.  The workhorse is a projected subgradient method on
the multipliers of the coupling constraints, whose inner problems are plain
weighted isotonic regressions; a pooling-based projection and two independent
oracles (cyclic corrected projections and exhaustive lattice search) confirm
its answers.
"""

from .core import (
    CheckReport,
    DimensionError,
    DomainError,
    DualState,
    MonotoneFit,
    OracleMismatchError,
    PairFit,
    PairedSample,
    SolverConfig,
    Violation,
    blocks_of,
    is_feasible,
    objective,
    pair_fit,
)
from .io import (
    FitRecord,
    ParseError,
    RawRecord,
    read_fit_record,
    read_sample,
    write_fit,
    write_sample,
)
from .oracle import DykstraState, brute_force, dykstra_project
from .ordered import (
    Diagnostics,
    OrderedConeProblem,
    kkt_check,
    project_ordered_pair,
    solve_dual,
)
from .pava import IsotonicProblem, gcm_check, isotonic_fit, isotonic_values

__version__ = "0.1.0"

__all__ = [
    "CheckReport",
    "Diagnostics",
    "DimensionError",
    "DomainError",
    "DualState",
    "DykstraState",
    "FitRecord",
    "IsotonicProblem",
    "MonotoneFit",
    "OracleMismatchError",
    "OrderedConeProblem",
    "PairFit",
    "PairedSample",
    "ParseError",
    "RawRecord",
    "SolverConfig",
    "Violation",
    "blocks_of",
    "brute_force",
    "dykstra_project",
    "gcm_check",
    "is_feasible",
    "isotonic_fit",
    "isotonic_values",
    "kkt_check",
    "objective",
    "pair_fit",
    "project_ordered_pair",
    "read_fit_record",
    "read_sample",
    "solve_dual",
    "write_fit",
    "write_sample",
]
