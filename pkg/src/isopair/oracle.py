"""Independent verification solvers.

Two deliberately different routes to the same constrained optimum:

* :func:`dykstra_project` — cyclic projections with correction terms onto the
  three constraint sets (coupling halfspaces, each monotone cone), under the
  weighted norm.  Converges to the exact projection for closed convex sets.
* :func:`brute_force` — exhaustive search over a value lattice for very small
  n, followed by exact coordinate descent to polish off the grid bias.

Neither shares iteration logic with the dual solver; they exist to certify it.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .core import (
    DomainError,
    PairFit,
    PairedSample,
    check_pair_arrays,
    pair_fit,
)
from .pava import isotonic_values

__all__ = ["DykstraState", "dykstra_project", "brute_force"]


@dataclass
class DykstraState:
    """Iterate and per-set correction increments of the cyclic projection."""

    a: np.ndarray
    b: np.ndarray
    corr_coupling_a: np.ndarray
    corr_coupling_b: np.ndarray
    corr_mono_a: np.ndarray
    corr_mono_b: np.ndarray
    rounds: int
    last_displacement: float
    converged: bool


def _dykstra(u, v, w1, w2, tol, max_rounds):
    n = u.size
    a = u.copy()
    b = v.copy()
    ca = np.zeros(n)  # coupling-set correction
    cb = np.zeros(n)
    ma = np.zeros(n)  # a-cone correction
    mb = np.zeros(n)  # b-cone correction
    wsum = w1 + w2
    converged = False
    disp = np.inf
    rounds = 0
    for rounds in range(1, max_rounds + 1):
        a_prev = a
        b_prev = b
        # coupling halfspaces: pool violated coordinates to the weighted mean
        ta = a + ca
        tb = b + cb
        bad = ta > tb
        mean = (w1 * ta + w2 * tb) / wsum
        a = np.where(bad, mean, ta)
        b = np.where(bad, mean, tb)
        ca = ta - a
        cb = tb - b
        # each monotone cone: weighted isotonic fit
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
    state = DykstraState(a, b, ca, cb, ma, mb, rounds, disp, converged)
    return state


def dykstra_project(u, v, w1, w2, tol: float = 1e-10, max_rounds: int = 100_000) -> PairFit:
    """Project (u, v) onto the constraint set by cyclic corrected projections.

    The norm is the weighted one induced by (w1, w2), matching the fitting
    objective.  Stops when the max elementwise displacement over a full round
    falls to ``tol``; hitting ``max_rounds`` first returns a fit flagged as
    non-converged.  A point already satisfying all constraints is returned
    unchanged after one round.
    """
    if tol <= 0:
        raise DomainError("tol must be strictly positive")
    if max_rounds < 1:
        raise DomainError("max_rounds must be at least 1")
    uv, vv, w1v, w2v = check_pair_arrays(u, v, w1, w2)
    state = _dykstra(uv, vv, w1v, w2v, tol, max_rounds)
    sample = PairedSample(np.arange(uv.size, dtype=np.float64), uv, vv, w1v, w2v)
    # the round ends on the two cone projections, so rows are exactly monotone
    return pair_fit(sample, state.a, state.b, "dykstra", converged=state.converged)


def _prefix_min_2d(t):
    return np.minimum.accumulate(np.minimum.accumulate(t, axis=0), axis=1)


def brute_force(sample: PairedSample, resolution: float) -> PairFit:
    """Certified near-optimal pair by exhaustive lattice search, n <= 3 only.

    Minimizes the objective over all lattice-valued feasible pairs, where the
    lattice has the given spacing and spans the data range padded by one unit
    on each side.  The search is organized stage by stage with running prefix
    minima, which visits the same lattice exhaustively without materializing
    the full product space.  The lattice optimum is then polished by exact
    per-coordinate descent, so interior coordinates land on the data values
    they should interpolate.
    """
    if resolution <= 0:
        raise DomainError("resolution must be strictly positive")
    n = sample.n
    if n > 3:
        raise DomainError("exhaustive search is limited to n <= 3")
    y, z, w1, w2 = sample.y, sample.z, sample.w1, sample.w2

    lo = float(min(y.min(), z.min())) - 1.0
    hi = float(max(y.max(), z.max())) + 1.0
    m = int(np.floor((hi - lo) / resolution)) + 2
    if m > 4608:
        raise DomainError("lattice too large; coarsen the resolution")
    grid = lo + resolution * np.arange(m)

    infeasible = grid[:, None] > grid[None, :]
    tables = []
    prev = None
    for j in range(n):
        cost = (w1[j] * (y[j] - grid) ** 2)[:, None] + (w2[j] * (z[j] - grid) ** 2)[None, :]
        if prev is not None:
            cost = cost + _prefix_min_2d(prev)
        cost[infeasible] = np.inf
        tables.append(cost)
        prev = cost

    ai, bi = np.unravel_index(int(np.argmin(tables[-1])), tables[-1].shape)
    a_idx = [ai]
    b_idx = [bi]
    for j in range(n - 2, -1, -1):
        sub = tables[j][: ai + 1, : bi + 1]
        ai, bi = np.unravel_index(int(np.argmin(sub)), sub.shape)
        a_idx.append(ai)
        b_idx.append(bi)
    a = grid[np.array(a_idx[::-1])]
    b = grid[np.array(b_idx[::-1])]

    a, b = _coordinate_descent(a, b, y, z, w1, w2)
    return pair_fit(sample, a, b, "brute_force", converged=True)


def _coordinate_descent(a, b, y, z, w1, w2, sweeps: int = 1000):
    """Exact per-coordinate minimization; keeps the pair feasible throughout."""
    a = a.copy()
    b = b.copy()
    n = a.size
    inf = np.inf
    for _ in range(sweeps):
        delta = 0.0
        for j in range(n):
            lo = a[j - 1] if j > 0 else -inf
            hi = min(a[j + 1] if j < n - 1 else inf, b[j])
            new = min(max(y[j], lo), hi)
            delta = max(delta, abs(new - a[j]))
            a[j] = new
        for j in range(n):
            lo = max(b[j - 1] if j > 0 else -inf, a[j])
            hi = b[j + 1] if j < n - 1 else inf
            new = min(max(z[j], lo), hi)
            delta = max(delta, abs(new - b[j]))
            b[j] = new
        if delta == 0.0:
            break
    return a, b
