"""Exact weighted isotonic regression and its optimality certificate.

The fitter is the pool-adjacent-violators scheme: scan left to right keeping a
stack of constant blocks, merging a new block into its predecessor (weighted
mean) while the predecessor's level exceeds it.  One pass, O(n), and the output
is nondecreasing by construction.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from numba import njit

from .core import (
    CheckReport,
    DimensionError,
    DomainError,
    MonotoneFit,
    Violation,
    as_vector,
)

__all__ = ["IsotonicProblem", "isotonic_fit", "isotonic_values", "gcm_check"]


@dataclass(frozen=True)
class IsotonicProblem:
    """One response vector with positive weights, to be fit monotonically."""

    data: np.ndarray
    weights: np.ndarray | None = None

    def __post_init__(self):
        d = as_vector(self.data, "data")
        if d.size < 1:
            raise DomainError("problem must contain at least one point")
        if not np.all(np.isfinite(d)):
            raise DomainError("data must be finite")
        object.__setattr__(self, "data", d)
        w = self.weights
        w = np.ones(d.size) if w is None else as_vector(w, "weights")
        if w.size != d.size:
            raise DimensionError(f"weights have length {w.size}, expected {d.size}")
        if not np.all(np.isfinite(w)) or np.any(w <= 0):
            raise DomainError("weights must be finite and strictly positive")
        object.__setattr__(self, "weights", w)

    @property
    def n(self) -> int:
        return self.data.size


@njit(cache=True)
def _pava(data, weights):
    n = data.shape[0]
    # block stack: level, pooled weight, start index
    level = np.empty(n)
    wsum = np.empty(n)
    start = np.empty(n, dtype=np.int64)
    top = -1
    for i in range(n):
        top += 1
        level[top] = data[i]
        wsum[top] = weights[i]
        start[top] = i
        while top > 0 and level[top - 1] > level[top]:
            w = wsum[top - 1] + wsum[top]
            level[top - 1] += (level[top] - level[top - 1]) * (wsum[top] / w)
            wsum[top - 1] = w
            top -= 1
    out = np.empty(n)
    for k in range(top + 1):
        stop = start[k + 1] if k < top else n
        for j in range(start[k], stop):
            out[j] = level[k]
    return out


def isotonic_values(data: np.ndarray, weights: np.ndarray) -> np.ndarray:
    """Weighted isotonic fit of raw float64 arrays, no validation or wrapping.

    Internal fast path for the iterative solvers; use :func:`isotonic_fit` for
    the validated public entry point.
    """
    return _pava(np.ascontiguousarray(data, dtype=np.float64),
                 np.ascontiguousarray(weights, dtype=np.float64))


def isotonic_fit(problem: IsotonicProblem) -> MonotoneFit:
    """Exact weighted least squares fit of a nondecreasing vector.

    Minimizes ``sum_j weights_j * (data_j - m_j)^2`` over nondecreasing ``m``.
    The solution pools the data into constant blocks whose levels are the
    weighted means of the pooled entries.
    """
    values = _pava(problem.data, problem.weights)
    # nondecreasing by construction; blocks come from exact level equality
    return MonotoneFit.from_values(values, validate=False)


def gcm_check(problem: IsotonicProblem, m, tol: float) -> CheckReport:
    """Certify that ``m`` is the isotonic optimum via cumulative residuals.

    With ``C_k = sum_{j<=k} w_j (data_j - m_j)`` the conditions are:
    ``m`` nondecreasing, ``C_k >= -tol`` for all k, ``|C_n| <= tol``, and
    ``|C_k| <= tol`` wherever ``m_{k+1} - m_k > tol`` (a material rise; smaller
    gaps are ties at the working tolerance, not block boundaries).  These are
    necessary and sufficient for optimality, so the check is an oracle
    independent of how ``m`` was produced.
    """
    if tol <= 0:
        raise DomainError("tol must be strictly positive")
    mv = as_vector(m, "m")
    if mv.size != problem.n:
        raise DimensionError(f"m has length {mv.size}, expected {problem.n}")
    violations: list[Violation] = []

    if mv.size > 1:
        drops = np.diff(mv)
        for j in np.flatnonzero(drops < -tol):
            violations.append(Violation("monotonicity", int(j), float(-drops[j])))

    c = np.cumsum(problem.weights * (problem.data - mv))
    for k in np.flatnonzero(c < -tol):
        violations.append(Violation("cumulative_residual", int(k), float(-c[k])))
    if abs(c[-1]) > tol:
        violations.append(Violation("total_residual", int(c.size - 1), float(abs(c[-1]))))
    if mv.size > 1:
        rises = np.flatnonzero(mv[1:] - mv[:-1] > tol)
        for k in rises[np.abs(c[rises]) > tol]:
            violations.append(Violation("block_boundary_residual", int(k), float(abs(c[k]))))

    return CheckReport(ok=not violations, violations=tuple(violations))
