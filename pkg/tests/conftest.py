import numpy as np

from isopair import PairedSample

# one (number, name, passed, detail) entry per acceptance criterion, printed
# as a summary block at the end of the run
ACCEPTANCE_RESULTS: list[tuple[int, str, bool, str]] = []


def record_criterion(num: int, name: str, ok: bool, detail: str = "") -> None:
    ACCEPTANCE_RESULTS.append((num, name, ok, detail))
    status = "PASS" if ok else "FAIL"
    print(f"criterion {num} ({name}): {status}" + (f" [{detail}]" if detail else ""))


def pytest_terminal_summary(terminalreporter, exitstatus, config):
    if not ACCEPTANCE_RESULTS:
        return
    terminalreporter.ensure_newline()
    terminalreporter.section("acceptance criteria")
    for num, name, ok, detail in sorted(ACCEPTANCE_RESULTS):
        status = "PASS" if ok else "FAIL"
        line = f"criterion {num} ({name}): {status}"
        if detail:
            line += f" [{detail}]"
        terminalreporter.write_line(line)


def random_sample(rng, n: int, weighted: bool = True) -> PairedSample:
    """Standard-normal responses on an increasing grid, log-uniform weights."""
    x = np.cumsum(rng.uniform(0.1, 1.0, n))
    y = rng.standard_normal(n)
    z = rng.standard_normal(n)
    if weighted:
        w1 = 10.0 ** rng.uniform(-1.0, 1.0, n)
        w2 = 10.0 ** rng.uniform(-1.0, 1.0, n)
    else:
        w1 = np.ones(n)
        w2 = np.ones(n)
    return PairedSample(x, y, z, w1, w2)


def inactive_sample(rng, n: int) -> PairedSample:
    """A sample whose separate isotonic fits are already strictly ordered."""
    from isopair.pava import isotonic_values

    x = np.cumsum(rng.uniform(0.1, 1.0, n))
    y = rng.standard_normal(n)
    z = rng.standard_normal(n)
    w1 = 10.0 ** rng.uniform(-1.0, 1.0, n)
    w2 = 10.0 ** rng.uniform(-1.0, 1.0, n)
    a0 = isotonic_values(y, w1)
    b0 = isotonic_values(z, w2)
    lift = max(0.0, float(np.max(a0 - b0))) + 0.5
    return PairedSample(x, y, z + lift, w1, w2)
