import numpy as np
import pytest
from numpy.testing import assert_allclose, assert_array_equal

from isopair import (
    OracleMismatchError,
    OrderedConeProblem,
    PairedSample,
    SolverConfig,
    dykstra_project,
    is_feasible,
    kkt_check,
    objective,
    pair_fit,
    project_ordered_pair,
    solve_dual,
)
from isopair.pava import isotonic_values
from conftest import inactive_sample, random_sample


def reference_sample():
    return PairedSample([0.0, 1.0], [1.0, 0.0], [0.0, 1.0])


# ---------------------------------------------------------------------------
# the dual solver on instances with known answers
# ---------------------------------------------------------------------------


def test_reference_instance_solved_exactly():
    fit, dual, diag = solve_dual(OrderedConeProblem(reference_sample()))
    assert fit.converged
    assert diag.converged
    assert_allclose(fit.a.values, [1 / 3, 1 / 3], atol=1e-6)
    assert_allclose(fit.b.values, [1 / 3, 1.0], atol=1e-6)
    assert fit.objective == pytest.approx(2.0 / 3.0, abs=1e-8)
    assert_allclose(dual.lam, [2 / 3, 0.0], atol=1e-6)
    assert fit.max_coupling_violation <= 1e-8
    assert dual.dual_value <= fit.objective + 1e-10


def test_single_point_coupling():
    s = PairedSample([0.0], [2.0], [0.0])
    fit, dual, _ = solve_dual(OrderedConeProblem(s))
    assert_allclose(fit.a.values, [1.0], atol=1e-7)
    assert_allclose(fit.b.values, [1.0], atol=1e-7)
    assert_allclose(dual.lam, [2.0], atol=1e-6)


def test_single_point_weighted_coupling():
    s = PairedSample([0.0], [2.0], [0.0], w1=[3.0], w2=[1.0])
    fit, dual, _ = solve_dual(OrderedConeProblem(s))
    # pooled level (3*2 + 1*0)/4 = 1.5; multiplier 2*w2*(b - z) = 3
    assert_allclose(fit.a.values, [1.5], atol=1e-7)
    assert_allclose(fit.b.values, [1.5], atol=1e-7)
    assert_allclose(dual.lam, [3.0], atol=1e-6)


def test_inactive_instances_reduce_to_separate_fits():
    rng = np.random.default_rng(30)
    for _ in range(20):
        n = int(rng.integers(1, 40))
        s = inactive_sample(rng, n)
        fit, dual, diag = solve_dual(OrderedConeProblem(s))
        assert fit.converged
        assert diag.iterations == 0
        assert_array_equal(fit.a.values, isotonic_values(s.y, s.w1))
        assert_array_equal(fit.b.values, isotonic_values(s.z, s.w2))
        assert_array_equal(dual.lam, np.zeros(n))


# ---------------------------------------------------------------------------
# structural properties of the iteration
# ---------------------------------------------------------------------------


def test_traces_and_duality_gap():
    rng = np.random.default_rng(31)
    s = random_sample(rng, 25)
    fit, dual, diag = solve_dual(OrderedConeProblem(s))
    assert fit.converged
    k = diag.iterations
    assert len(diag.dual_values) == k + 1
    assert len(diag.best_dual_values) == k + 1
    # the running best is nondecreasing and dominates the raw trace
    assert np.all(np.diff(diag.best_dual_values) >= 0)
    assert np.all(diag.best_dual_values >= diag.dual_values - 1e-12)
    # weak duality: every dual value is a lower bound on the primal optimum
    assert np.max(diag.dual_values) <= fit.objective + 1e-9
    # every recorded upper bound comes from a feasible pair
    assert np.all(diag.upper_bounds >= np.max(diag.dual_values) - 1e-9)
    assert dual.dual_value == pytest.approx(fit.objective, abs=1e-7)


def test_agrees_with_cyclic_projection_oracle():
    rng = np.random.default_rng(32)
    for _ in range(30):
        n = int(rng.integers(1, 50))
        s = random_sample(rng, n)
        fit, dual, _ = solve_dual(OrderedConeProblem(s))
        assert fit.converged
        oracle = dykstra_project(s.y, s.z, s.w1, s.w2, tol=1e-11)
        assert_allclose(fit.a.values, oracle.a.values, atol=1e-6)
        assert_allclose(fit.b.values, oracle.b.values, atol=1e-6)
        assert abs(fit.objective - oracle.objective) <= 1e-8 * (1.0 + oracle.objective)


def test_oracle_check_flag_runs_clean():
    rng = np.random.default_rng(33)
    s = random_sample(rng, 12)
    cfg = SolverConfig(oracle_check=True)
    fit, _, _ = solve_dual(OrderedConeProblem(s, cfg))
    assert fit.converged  # no OracleMismatchError raised


def test_non_convergence_is_reported_not_raised():
    s = reference_sample()
    cfg = SolverConfig(max_iter=1, gap_tol=1e-14, feas_tol=1e-14)
    fit, dual, diag = solve_dual(OrderedConeProblem(s, cfg))
    assert not fit.converged
    assert not diag.converged
    # the returned pair is still well formed: monotone rows, feasible coupling
    assert is_feasible(fit.a.values, fit.b.values, tol=1e-12)
    assert dual.dual_value <= fit.objective + 1e-10


def test_diminishing_step_rule_converges_loosely():
    cfg = SolverConfig(step_rule="diminishing", feas_tol=1e-4, gap_tol=1e-4, max_iter=200_000)
    fit, dual, _ = solve_dual(OrderedConeProblem(reference_sample(), cfg))
    assert fit.converged
    assert fit.objective == pytest.approx(2.0 / 3.0, abs=1e-3)
    assert_allclose(dual.lam, [2 / 3, 0.0], atol=0.05)


# ---------------------------------------------------------------------------
# equivariance
# ---------------------------------------------------------------------------


def test_reverse_negate_swap_equivariance():
    # flipping the index order, negating the data, and swapping the roles of
    # the two curves maps the problem onto itself, so the solution must map
    # the same way.
    rng = np.random.default_rng(34)
    for _ in range(20):
        n = int(rng.integers(1, 30))
        s = random_sample(rng, n)
        fit = project_ordered_pair(s.y, s.z, s.w1, s.w2)
        flipped = project_ordered_pair(-s.z[::-1], -s.y[::-1], s.w2[::-1], s.w1[::-1])
        assert_allclose(flipped.a.values, -fit.b.values[::-1], atol=1e-8)
        assert_allclose(flipped.b.values, -fit.a.values[::-1], atol=1e-8)


def test_weight_scale_invariance():
    rng = np.random.default_rng(35)
    for _ in range(20):
        n = int(rng.integers(1, 30))
        s = random_sample(rng, n)
        base = project_ordered_pair(s.y, s.z, s.w1, s.w2)
        for c in (0.25, 4.0):
            scaled = project_ordered_pair(s.y, s.z, c * s.w1, c * s.w2)
            assert_allclose(scaled.a.values, base.a.values, atol=1e-10)
            assert_allclose(scaled.b.values, base.b.values, atol=1e-10)


def test_shift_equivariance():
    rng = np.random.default_rng(36)
    s = random_sample(rng, 15)
    base = project_ordered_pair(s.y, s.z, s.w1, s.w2)
    shifted = project_ordered_pair(s.y + 5.0, s.z + 5.0, s.w1, s.w2)
    assert_allclose(shifted.a.values, base.a.values + 5.0, atol=1e-8)
    assert_allclose(shifted.b.values, base.b.values + 5.0, atol=1e-8)


# ---------------------------------------------------------------------------
# the pooling projection
# ---------------------------------------------------------------------------


def test_projection_ordered_input_returned_exactly():
    u = np.array([0.0, 0.5, 1.0])
    v = np.array([0.25, 0.75, 1.5])
    fit = project_ordered_pair(u, v, np.ones(3), np.ones(3))
    assert_array_equal(fit.a.values, u)
    assert_array_equal(fit.b.values, v)
    assert fit.converged


def test_projection_matches_dual_and_oracle():
    rng = np.random.default_rng(37)
    for _ in range(25):
        n = int(rng.integers(1, 40))
        s = random_sample(rng, n)
        pooled = project_ordered_pair(s.y, s.z, s.w1, s.w2)
        assert pooled.converged
        assert is_feasible(pooled.a.values, pooled.b.values)  # exactly
        oracle = dykstra_project(s.y, s.z, s.w1, s.w2, tol=1e-11)
        assert_allclose(pooled.a.values, oracle.a.values, atol=1e-6)
        assert_allclose(pooled.b.values, oracle.b.values, atol=1e-6)


def test_projection_reference_instance():
    fit = project_ordered_pair(
        np.array([1.0, 0.0]), np.array([0.0, 1.0]), np.ones(2), np.ones(2)
    )
    assert_allclose(fit.a.values, [1 / 3, 1 / 3], atol=1e-8)
    assert_allclose(fit.b.values, [1 / 3, 1.0], atol=1e-8)
    assert fit.objective == pytest.approx(2.0 / 3.0, abs=1e-8)


# ---------------------------------------------------------------------------
# optimality certificate
# ---------------------------------------------------------------------------


def test_kkt_accepts_converged_solutions():
    rng = np.random.default_rng(38)
    for _ in range(20):
        n = int(rng.integers(1, 40))
        s = random_sample(rng, n)
        fit, dual, _ = solve_dual(OrderedConeProblem(s))
        assert fit.converged
        report = kkt_check(s, fit, dual.lam, tol=1e-6)
        assert report.ok, report.summary()


def test_kkt_rejects_negative_multiplier():
    s = reference_sample()
    fit, dual, _ = solve_dual(OrderedConeProblem(s))
    lam = dual.lam.copy()
    lam[0] = -0.1
    report = kkt_check(s, fit, lam, tol=1e-6)
    assert any(v.condition == "dual_feasibility" for v in report.violations)


def test_kkt_rejects_slack_multiplier():
    s = reference_sample()
    fit, dual, _ = solve_dual(OrderedConeProblem(s))
    lam = dual.lam.copy()
    lam[1] = 1.0  # second coupling constraint is strictly slack at the optimum
    report = kkt_check(s, fit, lam, tol=1e-6)
    assert any(v.condition == "complementary_slackness" for v in report.violations)


def test_kkt_rejects_perturbed_fit():
    s = reference_sample()
    fit, dual, _ = solve_dual(OrderedConeProblem(s))
    bad = pair_fit(
        s,
        fit.a.values + np.array([0.0, 0.01]),
        fit.b.values,
        solver_tag="tampered",
        converged=True,
        validate=False,
    )
    report = kkt_check(s, bad, dual.lam, tol=1e-6)
    assert not report.ok
    assert any(v.condition.startswith("stationarity_a") for v in report.violations)


def test_kkt_rejects_infeasible_pair():
    s = reference_sample()
    bad = pair_fit(
        s, np.array([0.5, 0.5]), np.array([0.4, 1.0]),
        solver_tag="tampered", converged=True, validate=False,
    )
    report = kkt_check(s, bad, np.zeros(2), tol=1e-6)
    assert any(v.condition == "primal_coupling" for v in report.violations)


def test_objective_never_below_oracle():
    # the solver's objective equals the projection objective: check both
    # directions against an independently computed value
    rng = np.random.default_rng(39)
    s = random_sample(rng, 20)
    fit, _, _ = solve_dual(OrderedConeProblem(s))
    oracle = dykstra_project(s.y, s.z, s.w1, s.w2, tol=1e-11)
    assert fit.objective == pytest.approx(oracle.objective, rel=1e-8, abs=1e-10)
    # any feasible competitor is at least as expensive
    competitors = [
        (isotonic_values(s.y, s.w1),) * 2,
        (isotonic_values(s.z, s.w2),) * 2,
    ]
    for a, b in competitors:
        bb = np.maximum(a, b)
        assert objective(s, a, bb) >= fit.objective - 1e-9
