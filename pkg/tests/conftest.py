import sys

import numpy as np
import pytest

from lagcrit.corpus import corpus_cases
from lagcrit.kkt import Problem


@pytest.fixture(scope="session")
def cases():
    return {c.id: c for c in corpus_cases()}


@pytest.fixture
def rng():
    return np.random.default_rng(20240611)


@pytest.fixture
def bowl():
    """f = x1^2 + x2^2 on the line x2 = 0."""
    return Problem.from_text(("x1", "x2"), "x1^2 + x2^2", ("x2",), ((-1.0, 1.0),) * 2)


def pytest_terminal_summary(terminalreporter):
    mod = sys.modules.get("test_acceptance") or sys.modules.get("tests.test_acceptance")
    if mod is None or not mod.RESULTS:
        return
    terminalreporter.section("acceptance criteria")
    for line in mod.summary_lines():
        terminalreporter.write_line(line)
