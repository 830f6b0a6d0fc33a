"""Constrained estimation of an ordered pair of nondecreasing vectors.

Three entry points:

* :func:`solve_dual` — projected subgradient ascent on the multipliers of the
  coupling constraints a_j <= b_j.  Each dual evaluation splits into two
  independent weighted isotonic fits of tilted data, so every iteration costs
  O(n).  Primal feasibility is restored by pooling, which also supplies the
  upper bounds that drive the step size.
* :func:`project_ordered_pair` — direct projection onto the constraint set
  built entirely from pooling operations (coupling pools and isotonic fits),
  alternated with correction terms until the iterate stops moving.
* :func:`kkt_check` — stationarity certificate for a candidate fit together
  with candidate multipliers; independent of both solvers.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .core import (
    DEFAULT_KKT_TOL,
    CheckReport,
    DimensionError,
    DomainError,
    DualState,
    OracleMismatchError,
    PairFit,
    PairedSample,
    SolverConfig,
    Violation,
    as_vector,
    check_pair_arrays,
    pair_fit,
)
from .oracle import dykstra_project
from .pava import IsotonicProblem, gcm_check, isotonic_values

__all__ = [
    "OrderedConeProblem",
    "Diagnostics",
    "solve_dual",
    "project_ordered_pair",
    "kkt_check",
    "DEFAULT_KKT_TOL",
]

# Once both stopping tolerances hold, ascent continues briefly to shrink the
# gap a few more orders of magnitude; the returned fit then certifies at
# tolerances much tighter than the stopping ones.  Bounded by an iteration
# budget proportional to the iterations already spent.
POLISH_GAP_FACTOR = 1e-4
POLISH_MIN_BUDGET = 2000
POLISH_STALL = 300


@dataclass(frozen=True)
class OrderedConeProblem:
    """A paired sample together with the solver configuration to use."""

    sample: PairedSample
    config: SolverConfig = SolverConfig()


@dataclass
class Diagnostics:
    """Per-iteration traces of the dual solver."""

    dual_values: np.ndarray
    best_dual_values: np.ndarray
    max_violations: np.ndarray
    upper_bounds: np.ndarray
    iterations: int
    converged: bool


def _weighted_sse(w1, w2, ry, rz) -> float:
    return float(np.dot(w1 * ry, ry) + np.dot(w2 * rz, rz))


def _repair(a, b, y, z, w1, w2):
    """Cheap feasible point near (a, b), used only for upper bounds.

    One pooling round moves each violated pair to its weighted mean (the
    projection onto that coordinate's halfspace) and refits the rows.  Any
    residual violations are closed exactly by raising b to max(a, b) or
    lowering a to min(a, b); the elementwise max or min of two nondecreasing
    vectors is nondecreasing, so both candidates are feasible, and the one
    with the smaller objective is kept.
    """
    bad = a - b > 0.0
    mean = (w1 * a + w2 * b) / (w1 + w2)
    a1 = isotonic_values(np.where(bad, mean, a), w1)
    b1 = isotonic_values(np.where(bad, mean, b), w2)
    if float(np.max(a1 - b1)) <= 0.0:
        return a1, b1
    hi = np.maximum(a1, b1)
    lo = np.minimum(a1, b1)
    if _weighted_sse(w1, w2, y - a1, z - hi) <= _weighted_sse(w1, w2, y - lo, z - b1):
        return a1, hi
    return lo, b1


def solve_dual(problem: OrderedConeProblem) -> tuple[PairFit, DualState, Diagnostics]:
    """Projected subgradient ascent on the Lagrangian dual of the pair problem.

    The multipliers start at zero, so already-compatible data terminates in
    iteration 0 with the two independent isotonic fits.  Each iteration fits
    ``a`` to ``y - lam/(2 w1)`` and ``b`` to ``z + lam/(2 w2)``, reads off the
    subgradient ``a - b``, repairs the pair to a feasible upper bound, and
    steps ``lam`` by the configured rule (Polyak using the best upper bound,
    or diminishing ``c/sqrt(k+1)``), projecting back onto ``lam >= 0``.

    Stops when the worst coupling violation is at most ``feas_tol`` and the
    certified duality gap is at most ``gap_tol``; hitting ``max_iter`` first
    returns the best feasible fit found, flagged as non-converged.  Returns
    the feasible fit, the dual state anchoring it, and iteration traces.
    """
    sample = problem.sample
    cfg = problem.config
    y, z, w1, w2 = sample.y, sample.z, sample.w1, sample.w2
    n = sample.n
    tilt1 = 0.5 / w1
    tilt2 = 0.5 / w2
    eps = float(np.finfo(np.float64).eps)

    lam = np.zeros(n)
    q_best = -np.inf
    lam_best = lam.copy()
    g_best = np.zeros(n)
    k_best = 0
    u_best = np.inf
    a_inc = b_inc = None

    dual_trace: list[float] = []
    best_trace: list[float] = []
    viol_trace: list[float] = []
    upper_trace: list[float] = []

    snap = None
    first_hit = -1
    polish_budget = cfg.max_iter
    polish_target = cfg.gap_tol
    gap_mark = np.inf
    gap_mark_k = 0
    converged = False
    k = 0

    # relaxation factor for the Polyak step: halved when the free part of the
    # subgradient reverses direction (the iterate is straddling the optimum,
    # where the best-bound target overshoots), eased back up otherwise
    beta = cfg.step_constant
    g_red_prev = None

    for k in range(cfg.max_iter + 1):
        a = isotonic_values(y - lam * tilt1, w1)
        b = isotonic_values(z + lam * tilt2, w2)
        g = a - b
        viol = float(np.max(g))
        sse = _weighted_sse(w1, w2, y - a, z - b)
        q = sse + float(np.dot(lam, g))
        if q > q_best:
            q_best = q
            lam_best = lam.copy()
            g_best = g.copy()
            k_best = k

        if viol > 0.0:
            ar, br = _repair(a, b, y, z, w1, w2)
            u = _weighted_sse(w1, w2, y - ar, z - br)
        else:
            ar, br = a, b
            u = sse
        if u < u_best:
            u_best = u
            a_inc = ar.copy()
            b_inc = br.copy()

        dual_trace.append(q)
        best_trace.append(q_best)
        viol_trace.append(viol)
        upper_trace.append(u_best)

        gap = max(0.0, u_best - q_best)
        if gap < 0.9 * gap_mark:
            gap_mark = gap
            gap_mark_k = k
        if viol <= cfg.feas_tol and gap <= cfg.gap_tol and u - u_best <= cfg.gap_tol:
            snap = (lam.copy(), q, g.copy(), k, ar.copy(), br.copy())
            if first_hit < 0:
                first_hit = k
                polish_budget = min(k + max(POLISH_MIN_BUDGET, k), cfg.max_iter)
                polish_target = max(
                    cfg.gap_tol * POLISH_GAP_FACTOR,
                    128.0 * eps * (abs(u_best) + abs(q_best) + 1.0),
                )
            if gap <= polish_target or k >= polish_budget or k - gap_mark_k >= POLISH_STALL:
                converged = True
                break

        # components pinned at lam_j = 0 with a negative subgradient cannot
        # move, so they are excluded from the step-length denominator
        moving = (lam > 0.0) | (g > 0.0)
        g_red = np.where(moving, g, 0.0)
        gg = float(np.dot(g_red, g_red))
        if gg == 0.0:
            # projected-stationary: feasible and complementary, nothing to move
            converged = snap is not None
            break
        if cfg.step_rule == "polyak":
            if g_red_prev is not None and float(np.dot(g_red, g_red_prev)) < 0.0:
                beta = max(0.5 * beta, 1e-13 * cfg.step_constant)
            else:
                beta = min(1.05 * beta, cfg.step_constant)
            g_red_prev = g_red
            num = u_best - q
            if num <= 0.0:
                step = cfg.step_constant / np.sqrt(k + 1.0)
            else:
                step = beta * num / gg
        else:
            step = cfg.step_constant / np.sqrt(k + 1.0)
        lam = lam + step * g
        np.maximum(lam, 0.0, out=lam)

    if snap is not None:
        lam_o, q_o, g_o, k_o, a_o, b_o = snap
        converged = True
    else:
        lam_o, q_o, g_o, k_o = lam_best, q_best, g_best, k_best
        a_o, b_o = a_inc, b_inc

    fit = pair_fit(sample, a_o, b_o, "dual", converged=converged)
    dual = DualState(lam=lam_o, dual_value=q_o, subgradient=g_o, iteration=k_o)
    diag = Diagnostics(
        dual_values=np.asarray(dual_trace),
        best_dual_values=np.asarray(best_trace),
        max_violations=np.asarray(viol_trace),
        upper_bounds=np.asarray(upper_trace),
        iterations=k,
        converged=converged,
    )

    if cfg.oracle_check and converged:
        ref = dykstra_project(y, z, w1, w2, tol=min(1e-10, cfg.feas_tol * 1e-2))
        err = max(
            float(np.max(np.abs(fit.a.values - ref.a.values))),
            float(np.max(np.abs(fit.b.values - ref.b.values))),
        )
        if err > 1e-6:
            raise OracleMismatchError(
                f"dual solver disagrees with cyclic projection by {err:.3e}"
            )

    return fit, dual, diag


def _pool_project(u, v, w1, w2, tol, max_rounds):
    """Corrected alternation between the coupling pools and the two row fits.

    Returns raw vectors plus the round count; rounds end on the isotonic fits
    so the rows are exactly monotone.  Any coupling violation left at the
    stopping tolerance is closed exactly by raising b to max(a, b) or lowering
    a to min(a, b) (both keep the rows monotone), whichever is cheaper, so the
    returned pair always satisfies a <= b.
    """
    a0 = isotonic_values(u, w1)
    b0 = isotonic_values(v, w2)
    if float(np.max(a0 - b0)) <= 0.0:
        # separable fits already compatible: they solve the coupled problem
        return a0, b0, 0, True
    n = u.size
    a = u.copy()
    b = v.copy()
    ca = np.zeros(n)
    cb = np.zeros(n)
    ma = np.zeros(n)
    mb = np.zeros(n)
    wsum = w1 + w2
    converged = False
    rounds = 0
    for rounds in range(1, max_rounds + 1):
        a_prev = a
        b_prev = b
        ta = a + ca
        tb = b + cb
        bad = ta > tb
        mean = (w1 * ta + w2 * tb) / wsum
        a = np.where(bad, mean, ta)
        b = np.where(bad, mean, tb)
        ca = ta - a
        cb = tb - b
        ta = a + ma
        a = isotonic_values(ta, w1)
        ma = ta - a
        tb = b + mb
        b = isotonic_values(tb, w2)
        mb = tb - b
        disp = max(float(np.max(np.abs(a - a_prev))), float(np.max(np.abs(b - b_prev))))
        if disp <= tol:
            converged = True
            break
    if float(np.max(a - b)) > 0.0:
        hi = np.maximum(a, b)
        lo = np.minimum(a, b)
        if _weighted_sse(w1, w2, u - a, v - hi) <= _weighted_sse(w1, w2, u - lo, v - b):
            b = hi
        else:
            a = lo
    return a, b, rounds, converged


def project_ordered_pair(u, v, w1, w2, config: SolverConfig | None = None) -> PairFit:
    """Weighted projection of (u, v) onto the ordered monotone constraint set.

    Alternates exact pooling projections (coupling halfspaces, then the two
    monotone cones) with correction terms, which converges to the exact
    constrained optimum.  Stops once a full round moves no coordinate by more
    than ``feas_tol * 1e-2``; hitting ``max_iter`` rounds first returns the
    iterate flagged as non-converged.  The returned pair is always exactly
    feasible: monotone rows with ``a <= b`` pointwise.
    """
    cfg = config if config is not None else SolverConfig()
    uv, vv, w1v, w2v = check_pair_arrays(u, v, w1, w2)
    a, b, _, converged = _pool_project(uv, vv, w1v, w2v, cfg.feas_tol * 1e-2, cfg.max_iter)
    sample = PairedSample(np.arange(uv.size, dtype=np.float64), uv, vv, w1v, w2v)
    return pair_fit(sample, a, b, "pava", converged=converged)


def kkt_check(sample: PairedSample, fit: PairFit, lam, tol: float) -> CheckReport:
    """Certify joint optimality of a fitted pair and coupling multipliers.

    Conditions, each at tolerance ``tol``: primal feasibility of the pair,
    nonnegativity of the multipliers, complementary slackness
    ``lam_j (b_j - a_j) <= tol``, and stationarity of each row, expressed as
    the cumulative-residual certificate of the row against its tilted data
    (``y - lam/(2 w1)`` and ``z + lam/(2 w2)``).
    """
    if tol <= 0:
        raise DomainError("tol must be strictly positive")
    lv = as_vector(lam, "lam")
    a = fit.a.values
    b = fit.b.values
    n = sample.n
    if a.size != n or b.size != n or lv.size != n:
        raise DimensionError("fit and multipliers must match the sample length")

    violations: list[Violation] = []
    if n > 1:
        da = np.diff(a)
        for j in np.flatnonzero(da < -tol):
            violations.append(Violation("primal_monotonicity_a", int(j), float(-da[j])))
        db = np.diff(b)
        for j in np.flatnonzero(db < -tol):
            violations.append(Violation("primal_monotonicity_b", int(j), float(-db[j])))
    coupling = a - b
    for j in np.flatnonzero(coupling > tol):
        violations.append(Violation("primal_coupling", int(j), float(coupling[j])))
    for j in np.flatnonzero(lv < -tol):
        violations.append(Violation("dual_feasibility", int(j), float(-lv[j])))
    slack = lv * (b - a)
    for j in np.flatnonzero(slack > tol):
        violations.append(Violation("complementary_slackness", int(j), float(slack[j])))

    tilted_a = IsotonicProblem(sample.y - lv / (2.0 * sample.w1), sample.w1)
    for v in gcm_check(tilted_a, a, tol).violations:
        violations.append(Violation(f"stationarity_a_{v.condition}", v.index, v.magnitude))
    tilted_b = IsotonicProblem(sample.z + lv / (2.0 * sample.w2), sample.w2)
    for v in gcm_check(tilted_b, b, tol).violations:
        violations.append(Violation(f"stationarity_b_{v.condition}", v.index, v.magnitude))

    return CheckReport(ok=not violations, violations=tuple(violations))
