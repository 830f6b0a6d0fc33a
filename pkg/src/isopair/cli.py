"""Command line interface: fit, check, simulate, bench."""

from __future__ import annotations

import argparse
import sys
import time

import numpy as np

from .core import (
    DEFAULT_KKT_TOL,
    DimensionError,
    DomainError,
    MonotoneFit,
    PairFit,
    PairedSample,
    SolverConfig,
    blocks_of,
    is_feasible,
    objective,
    pair_fit,
)
from .io import FORMATS, ParseError, read_fit_record, read_sample, write_fit, write_sample
from .oracle import _dykstra
from .ordered import Diagnostics, OrderedConeProblem, _pool_project, kkt_check, solve_dual
from .pava import isotonic_values

EXIT_OK = 0
EXIT_INPUT = 1
EXIT_NO_CONVERGENCE = 2
EXIT_CHECK_FAILED = 3

DEFAULT_SEED = 20100401

METHODS = ("dual", "pava", "dykstra")
FAMILIES = ("affine", "piecewise", "logistic")
BENCH_SOLVERS = ("isotonic", "dual", "pava", "dykstra")


class _UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    # argparse exits with status 2 on usage errors; that code is reserved for
    # non-convergence here, so remap usage problems to the input-error path
    def error(self, message):
        raise _UsageError(message)


def _say(msg: str) -> None:
    print(msg, file=sys.stderr)


def _in_source(path: str):
    return sys.stdin if path == "-" else path


def _out_sink(path: str):
    return sys.stdout if path == "-" else path


def _config_from(args) -> SolverConfig:
    return SolverConfig(
        feas_tol=args.feas_tol,
        gap_tol=args.gap_tol,
        max_iter=args.max_iter,
        step_rule=args.step_rule,
    )


def cmd_fit(args) -> int:
    sample = read_sample(_in_source(args.input))
    config = _config_from(args)
    empty = np.empty(0)
    if args.method == "dual":
        fit, dual, diag = solve_dual(OrderedConeProblem(sample, config))
    elif args.method == "pava":
        a, b, rounds, ok = _pool_project(
            sample.y, sample.z, sample.w1, sample.w2,
            config.feas_tol * 1e-2, config.max_iter,
        )
        fit = pair_fit(sample, a, b, "pava", converged=ok)
        dual = None
        diag = Diagnostics(empty, empty, empty, empty, iterations=rounds, converged=ok)
    else:
        state = _dykstra(
            sample.y, sample.z, sample.w1, sample.w2,
            config.feas_tol * 1e-2, config.max_iter,
        )
        fit = pair_fit(sample, state.a, state.b, "dykstra", converged=state.converged)
        dual = None
        diag = Diagnostics(empty, empty, empty, empty,
                           iterations=state.rounds, converged=state.converged)
    write_fit(sample, fit, dual, diag, sink=_out_sink(args.output),
              fmt=args.format, config=config)
    _say(
        f"n={sample.n} solver={fit.solver_tag} objective={fit.objective:.12g} "
        f"max_coupling_violation={fit.max_coupling_violation:.3e} "
        f"iterations={diag.iterations} converged={fit.converged}"
    )
    return EXIT_OK if fit.converged else EXIT_NO_CONVERGENCE


def cmd_check(args) -> int:
    record = read_fit_record(_in_source(args.record))
    sample = record.sample
    problems: list[str] = []

    recomputed = objective(sample, record.a, record.b)
    if abs(recomputed - record.objective) > 1e-12 * max(1.0, abs(recomputed)):
        problems.append(
            f"objective mismatch: recorded {record.objective!r}, recomputed {recomputed!r}"
        )

    tol = record.kkt_tol
    if not is_feasible(record.a, record.b, tol):
        problems.append(f"fitted pair is not feasible at tolerance {tol:g}")

    fit = PairFit(
        a=MonotoneFit(record.a, blocks_of(record.a)),
        b=MonotoneFit(record.b, blocks_of(record.b)),
        objective=recomputed,
        max_coupling_violation=float(np.max(record.a - record.b)),
        solver_tag=record.solver_tag,
        converged=record.converged,
    )
    if record.lam is not None:
        report = kkt_check(sample, fit, record.lam, tol)
        if not report.ok:
            problems.extend(str(v) for v in report.violations)
    else:
        config = SolverConfig(feas_tol=record.feas_tol, gap_tol=record.gap_tol)
        a, b, _, _ = _pool_project(
            sample.y, sample.z, sample.w1, sample.w2,
            config.feas_tol * 1e-2, config.max_iter,
        )
        err = max(float(np.max(np.abs(record.a - a))), float(np.max(np.abs(record.b - b))))
        if err > tol:
            problems.append(f"fit differs from recomputed projection by {err:.3e}")

    if problems:
        for p in problems:
            _say(f"check failed: {p}")
        return EXIT_CHECK_FAILED
    _say(f"check passed: n={sample.n} solver={record.solver_tag} objective={recomputed:.12g}")
    return EXIT_OK


def _family_curves(family: str, x: np.ndarray):
    if family == "affine":
        return 0.25 + 0.5 * x, 0.75 + 0.7 * x
    if family == "piecewise":
        g1 = np.select([x < 1 / 3, x < 2 / 3], [0.0, 0.5], default=1.0)
        g2 = np.select([x < 1 / 3, x < 2 / 3], [0.4, 0.9], default=1.5)
        return g1, g2
    g1 = 1.0 / (1.0 + np.exp(-8.0 * (x - 0.6)))
    g2 = 1.2 / (1.0 + np.exp(-8.0 * (x - 0.4))) + 0.1
    return g1, g2


def cmd_simulate(args) -> int:
    if args.n < 1:
        raise DomainError("--n must be at least 1")
    if args.sd < 0:
        raise DomainError("--sd must be nonnegative")
    rng = np.random.default_rng(args.seed)
    x = np.linspace(0.0, 1.0, args.n)
    g1, g2 = _family_curves(args.family, x)
    y = g1 + args.sd * rng.standard_normal(args.n)
    z = g2 + args.sd * rng.standard_normal(args.n)
    sample = PairedSample(x, y, z)
    write_sample(sample, _out_sink(args.output))
    _say(f"simulated n={args.n} family={args.family} sd={args.sd:g} seed={args.seed}")
    return EXIT_OK


def _bench_instance(rng, n: int) -> PairedSample:
    x = np.arange(n, dtype=np.float64)
    y = rng.standard_normal(n)
    z = rng.standard_normal(n)
    w1 = 10.0 ** rng.uniform(-1.0, 1.0, n)
    w2 = 10.0 ** rng.uniform(-1.0, 1.0, n)
    return PairedSample(x, y, z, w1, w2)


def cmd_bench(args) -> int:
    try:
        sizes = [int(s) for s in args.sizes.split(",") if s.strip()]
    except ValueError:
        raise DomainError(f"could not parse --sizes {args.sizes!r}") from None
    if not sizes or any(n < 1 for n in sizes):
        raise DomainError("--sizes must be positive integers")
    solvers = [s.strip() for s in args.solvers.split(",") if s.strip()]
    for s in solvers:
        if s not in BENCH_SOLVERS:
            raise DomainError(f"unknown solver {s!r}, expected one of {BENCH_SOLVERS}")
    if args.reps < 1:
        raise DomainError("--reps must be at least 1")
    config = _config_from(args)
    rng = np.random.default_rng(args.seed)

    # trigger jit compilation outside the timed region
    warm = _bench_instance(rng, 32)
    isotonic_values(warm.y, warm.w1)
    solve_dual(OrderedConeProblem(warm, config))
    _pool_project(warm.y, warm.z, warm.w1, warm.w2, config.feas_tol * 1e-2, config.max_iter)
    _dykstra(warm.y, warm.z, warm.w1, warm.w2, config.feas_tol * 1e-2, config.max_iter)

    lines = ["n,solver,median_seconds,median_iterations"]
    for n in sizes:
        samples = [_bench_instance(rng, n) for _ in range(args.reps)]
        for solver in solvers:
            times = []
            iters = []
            for sample in samples:
                t0 = time.perf_counter()
                if solver == "isotonic":
                    isotonic_values(sample.y, sample.w1)
                    its = 1
                elif solver == "dual":
                    _, _, diag = solve_dual(OrderedConeProblem(sample, config))
                    its = diag.iterations
                elif solver == "pava":
                    _, _, its, _ = _pool_project(
                        sample.y, sample.z, sample.w1, sample.w2,
                        config.feas_tol * 1e-2, config.max_iter,
                    )
                else:
                    state = _dykstra(
                        sample.y, sample.z, sample.w1, sample.w2,
                        config.feas_tol * 1e-2, config.max_iter,
                    )
                    its = state.rounds
                times.append(time.perf_counter() - t0)
                iters.append(its)
            lines.append(
                f"{n},{solver},{float(np.median(times)):.6g},{int(np.median(iters))}"
            )
            _say(f"bench n={n} solver={solver} median_seconds={float(np.median(times)):.6g}")

    text = "\n".join(lines) + "\n"
    sink = _out_sink(args.output)
    if sink is sys.stdout:
        sink.write(text)
    else:
        with open(sink, "w", encoding="utf-8", newline="") as fh:
            fh.write(text)
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(
        prog="isopair",
        description="Fit two nondecreasing curves under a pointwise order constraint.",
    )
    sub = parser.add_subparsers(dest="command", parser_class=_Parser)

    fit = sub.add_parser("fit", help="fit a CSV sample and write the result")
    fit.add_argument("input", nargs="?", default="-", help="input CSV path, - for stdin")
    fit.add_argument("-o", "--output", default="-", help="output path, - for stdout")
    fit.add_argument("--method", choices=METHODS, default="dual")
    fit.add_argument("--format", choices=FORMATS, default="json")
    fit.add_argument("--feas-tol", type=float, default=SolverConfig().feas_tol)
    fit.add_argument("--gap-tol", type=float, default=SolverConfig().gap_tol)
    fit.add_argument("--max-iter", type=int, default=SolverConfig().max_iter)
    fit.add_argument("--step-rule", choices=("polyak", "diminishing"), default="polyak")
    fit.set_defaults(func=cmd_fit)

    check = sub.add_parser("check", help="re-verify a stored fit document")
    check.add_argument("record", nargs="?", default="-", help="fit JSON path, - for stdin")
    check.set_defaults(func=cmd_check)

    sim = sub.add_parser("simulate", help="write a synthetic sample CSV")
    sim.add_argument("-o", "--output", default="-", help="output path, - for stdout")
    sim.add_argument("--n", type=int, default=50)
    sim.add_argument("--sd", type=float, default=0.25)
    sim.add_argument("--family", choices=FAMILIES, default="affine")
    sim.add_argument("--seed", type=int, default=DEFAULT_SEED)
    sim.set_defaults(func=cmd_simulate)

    bench = sub.add_parser("bench", help="time the solvers on synthetic instances")
    bench.add_argument("-o", "--output", default="-", help="output CSV path, - for stdout")
    bench.add_argument("--sizes", default="100,1000")
    bench.add_argument("--reps", type=int, default=3)
    bench.add_argument("--solvers", default=",".join(BENCH_SOLVERS))
    bench.add_argument("--feas-tol", type=float, default=SolverConfig().feas_tol)
    bench.add_argument("--gap-tol", type=float, default=SolverConfig().gap_tol)
    bench.add_argument("--max-iter", type=int, default=SolverConfig().max_iter)
    bench.add_argument("--step-rule", choices=("polyak", "diminishing"), default="polyak")
    bench.add_argument("--seed", type=int, default=DEFAULT_SEED)
    bench.set_defaults(func=cmd_bench)

    return parser


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except _UsageError as exc:
        _say(f"error: {exc}")
        return EXIT_INPUT
    if not hasattr(args, "func"):
        parser.print_help(sys.stderr)
        return EXIT_INPUT
    try:
        return args.func(args)
    except (ParseError, DomainError, DimensionError, OSError) as exc:
        _say(f"error: {exc}")
        return EXIT_INPUT


if __name__ == "__main__":
    sys.exit(main())
