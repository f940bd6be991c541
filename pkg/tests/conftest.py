import numpy as np
import pytest

from dpctrack.bench import paper_benchmark

ACCEPTANCE_LINES = []


@pytest.fixture(scope="session")
def desk():
    return paper_benchmark(seed=0)


@pytest.fixture
def rng():
    return np.random.default_rng(1234)


@pytest.fixture
def report():
    """Record one acceptance line: ``report(number, passed, detail)``."""
    def _report(number, passed, detail, info=False):
        tag = "INFO" if info else ("PASS" if passed else "FAIL")
        line = f"criterion {number:>2}: {tag}  {detail}"
        ACCEPTANCE_LINES.append(line)
        print(line)
    return _report


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in ACCEPTANCE_LINES:
            terminalreporter.write_line(line)
