import numpy as np
import pytest

# test_acceptance.py appends one "ACCEPTANCE n: PASS/FAIL - ..." line per
# criterion; echoed after the run so they are visible without -s.
ACCEPTANCE_LINES: list[str] = []


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in ACCEPTANCE_LINES:
            terminalreporter.write_line(line)


def rel_err(a: float, b: float, floor: float = 1e-6) -> float:
    """Relative error with a floor so near-zero gradients compare absolutely."""
    return abs(a - b) / max(abs(a), abs(b), floor)


def central_diff(f, x0: float, h: float = 1e-5) -> float:
    return (f(x0 + h) - f(x0 - h)) / (2.0 * h)


@pytest.fixture
def rng():
    return np.random.Generator(np.random.Philox(12345))
