import numpy as np
import pytest
from hypothesis import strategies as st

from geomdetect.graph_core import Graph


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


@st.composite
def graphs(draw, min_n=1, max_n=9):
    n = draw(st.integers(min_n, max_n))
    pairs = [(i, j) for i in range(1, n + 1) for j in range(i + 1, n + 1)]
    bits = draw(st.lists(st.booleans(), min_size=len(pairs), max_size=len(pairs)))
    return Graph(n, [e for e, b in zip(pairs, bits) if b])


def within_se(values, target, k=4.0):
    """Mean of ``values`` is within ``k`` standard errors of ``target``."""
    x = np.asarray(values, dtype=float)
    se = x.std(ddof=1) / np.sqrt(x.size)
    return abs(x.mean() - target) <= k * se, x.mean(), se


# one (number, title, passed, detail) entry per acceptance criterion
ACCEPTANCE_RESULTS = []


def report(number, title, passed, detail):
    """Record and print one acceptance line, then fail the test if it did not pass."""
    line = f"criterion {number:>2} {'PASS' if passed else 'FAIL'}: {title} ({detail})"
    ACCEPTANCE_RESULTS.append((number, line))
    print(line)
    assert passed, line


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_RESULTS:
        terminalreporter.section("acceptance criteria")
        for _, line in sorted(ACCEPTANCE_RESULTS):
            terminalreporter.write_line(line)
