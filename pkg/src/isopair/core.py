"""Shared domain types, the weighted objective, and feasibility predicates."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

__all__ = [
    "DomainError",
    "DimensionError",
    "OracleMismatchError",
    "PairedSample",
    "MonotoneFit",
    "PairFit",
    "DualState",
    "SolverConfig",
    "Violation",
    "CheckReport",
    "objective",
    "is_feasible",
    "blocks_of",
]

STEP_RULES = ("polyak", "diminishing")

# tolerance at which stationarity certificates are evaluated unless overridden
DEFAULT_KKT_TOL = 1e-6


class DomainError(ValueError):
    """Raised when an input is outside the domain of an operation."""


class DimensionError(ValueError):
    """Raised when vector lengths are inconsistent."""


class OracleMismatchError(RuntimeError):
    """Raised when a solver result disagrees with an independent oracle."""


def as_vector(x, name: str) -> np.ndarray:
    """Coerce to a 1-d float64 array, rejecting higher-rank input."""
    arr = np.asarray(x, dtype=np.float64)
    if arr.ndim != 1:
        raise DimensionError(f"{name} must be one-dimensional, got shape {arr.shape}")
    return arr


def blocks_of(values: np.ndarray) -> tuple[tuple[int, int], ...]:
    """Maximal runs of exactly equal adjacent entries, as half-open [start, stop) pairs."""
    v = np.asarray(values, dtype=np.float64)
    if v.size == 0:
        return ()
    cuts = np.flatnonzero(v[1:] != v[:-1]) + 1
    edges = np.concatenate(([0], cuts, [v.size]))
    return tuple((int(a), int(b)) for a, b in zip(edges[:-1], edges[1:]))


@dataclass(frozen=True)
class PairedSample:
    """Two response vectors observed at common strictly increasing design points.

    ``w1`` and ``w2`` are per-point positive weights for the first and second
    response; they default to 1.
    """

    x: np.ndarray
    y: np.ndarray
    z: np.ndarray
    w1: np.ndarray | None = None
    w2: np.ndarray | None = None

    def __post_init__(self):
        x = as_vector(self.x, "x")
        n = x.size
        if n < 1:
            raise DomainError("sample must contain at least one point")
        object.__setattr__(self, "x", x)
        for name in ("y", "z"):
            v = as_vector(getattr(self, name), name)
            if v.size != n:
                raise DimensionError(f"{name} has length {v.size}, expected {n}")
            object.__setattr__(self, name, v)
        for name in ("w1", "w2"):
            w = getattr(self, name)
            w = np.ones(n) if w is None else as_vector(w, name)
            if w.size != n:
                raise DimensionError(f"{name} has length {w.size}, expected {n}")
            if not np.all(np.isfinite(w)) or np.any(w <= 0):
                raise DomainError(f"{name} must be finite and strictly positive")
            object.__setattr__(self, name, w)
        if not (np.all(np.isfinite(x)) and np.all(np.isfinite(self.y)) and np.all(np.isfinite(self.z))):
            raise DomainError("x, y, z must be finite")
        if n > 1 and np.any(np.diff(x) <= 0):
            raise DomainError("x must be strictly increasing")

    @property
    def n(self) -> int:
        return self.x.size


@dataclass(frozen=True)
class MonotoneFit:
    """A nondecreasing fitted vector together with its constant-level blocks.

    ``blocks`` lists half-open index ranges over which the fitted value is
    exactly constant; consecutive blocks carry strictly increasing levels.
    """

    values: np.ndarray
    blocks: tuple[tuple[int, int], ...]

    @classmethod
    def from_values(cls, values, validate: bool = True) -> "MonotoneFit":
        v = as_vector(values, "values")
        if v.size == 0:
            raise DomainError("fit must contain at least one value")
        if validate and v.size > 1 and np.any(np.diff(v) < 0):
            raise DomainError("fitted values must be nondecreasing")
        return cls(v, blocks_of(v))

    @property
    def n(self) -> int:
        return self.values.size


@dataclass(frozen=True)
class PairFit:
    """A pair of nondecreasing fits with bookkeeping about how they were produced.

    ``max_coupling_violation`` is ``max_j (a_j - b_j)``; nonpositive means the
    pointwise order constraint holds exactly.
    """

    a: MonotoneFit
    b: MonotoneFit
    objective: float
    max_coupling_violation: float
    solver_tag: str
    converged: bool = True


def pair_fit(sample: PairedSample, a, b, solver_tag: str,
             converged: bool = True, validate: bool = True) -> PairFit:
    """Assemble a :class:`PairFit` from raw vectors, computing the derived fields."""
    av = as_vector(a, "a")
    bv = as_vector(b, "b")
    if av.size != sample.n or bv.size != sample.n:
        raise DimensionError("fitted vectors must match the sample length")
    return PairFit(
        a=MonotoneFit.from_values(av, validate=validate),
        b=MonotoneFit.from_values(bv, validate=validate),
        objective=objective(sample, av, bv),
        max_coupling_violation=float(np.max(av - bv)),
        solver_tag=solver_tag,
        converged=converged,
    )


@dataclass(frozen=True)
class DualState:
    """Multipliers for the coupling constraints plus the dual value they attain."""

    lam: np.ndarray
    dual_value: float
    subgradient: np.ndarray
    iteration: int


@dataclass(frozen=True)
class SolverConfig:
    """Tolerances and step-rule knobs shared by the iterative solvers."""

    feas_tol: float = 1e-8
    gap_tol: float = 1e-8
    max_iter: int = 100_000
    step_rule: str = "polyak"
    step_constant: float = 1.0
    oracle_check: bool = False

    def __post_init__(self):
        if not (self.feas_tol > 0 and self.gap_tol > 0 and self.step_constant > 0):
            raise DomainError("tolerances and step constant must be strictly positive")
        if self.max_iter < 1:
            raise DomainError("max_iter must be at least 1")
        if self.step_rule not in STEP_RULES:
            raise DomainError(f"step_rule must be one of {STEP_RULES}")


@dataclass(frozen=True)
class Violation:
    """One violated condition: which, where, and by how much."""

    condition: str
    index: int
    magnitude: float

    def __str__(self) -> str:
        return f"{self.condition} at index {self.index} (magnitude {self.magnitude:.6e})"


@dataclass(frozen=True)
class CheckReport:
    """Outcome of a certificate check; falsy iff any condition failed."""

    ok: bool
    violations: tuple[Violation, ...] = ()

    def __bool__(self) -> bool:
        return self.ok

    def summary(self) -> str:
        if self.ok:
            return "ok"
        lines = [f"{len(self.violations)} violated condition(s):"]
        lines += [f"  - {v}" for v in self.violations]
        return "\n".join(lines)


def objective(sample: PairedSample, a, b) -> float:
    """Weighted squared error of a candidate pair against the sample.

    Returns ``sum w1*(y-a)^2 + sum w2*(z-b)^2``; zero exactly when the pair
    interpolates the data.
    """
    av = as_vector(a, "a")
    bv = as_vector(b, "b")
    if av.size != sample.n or bv.size != sample.n:
        raise DimensionError("candidate vectors must match the sample length")
    ra = sample.y - av
    rb = sample.z - bv
    return float(np.dot(sample.w1 * ra, ra) + np.dot(sample.w2 * rb, rb))


def check_pair_arrays(u, v, w1, w2):
    """Validate raw (point, point, weights, weights) arrays for the pair solvers."""
    uv = as_vector(u, "u")
    vv = as_vector(v, "v")
    w1v = as_vector(w1, "w1")
    w2v = as_vector(w2, "w2")
    n = uv.size
    if n < 1:
        raise DomainError("input must contain at least one point")
    for name, arr in (("v", vv), ("w1", w1v), ("w2", w2v)):
        if arr.size != n:
            raise DimensionError(f"{name} has length {arr.size}, expected {n}")
    if not (np.all(np.isfinite(uv)) and np.all(np.isfinite(vv))):
        raise DomainError("u and v must be finite")
    for name, w in (("w1", w1v), ("w2", w2v)):
        if not np.all(np.isfinite(w)) or np.any(w <= 0):
            raise DomainError(f"{name} must be finite and strictly positive")
    return uv, vv, w1v, w2v


def is_feasible(a, b, tol: float = 0.0) -> bool:
    """True when both vectors are nondecreasing and a <= b pointwise, all up to tol."""
    if tol < 0:
        raise DomainError("tol must be nonnegative")
    av = as_vector(a, "a")
    bv = as_vector(b, "b")
    if av.size != bv.size:
        raise DimensionError("a and b must have equal length")
    if av.size > 1:
        if np.any(np.diff(av) < -tol) or np.any(np.diff(bv) < -tol):
            return False
    return bool(np.all(av - bv <= tol))
