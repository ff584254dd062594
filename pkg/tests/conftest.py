import os
import sys
from pathlib import Path

# must precede the first numba import so the pool has room for 4 workers
os.environ.setdefault("NUMBA_NUM_THREADS", "4")

sys.path.insert(0, str(Path(__file__).parent))

import numpy as np  # noqa: E402
import pytest  # noqa: E402
import scipy.sparse as sp  # noqa: E402

from pdlp.problem import LpProblem  # noqa: E402


@pytest.fixture
def lp1():
    """min -x1 - 2 x2  s.t.  x1 + x2 <= 1,  x >= 0.  Optimum x=(0,1), y=-2, r=(1,0), f=-2."""
    return LpProblem(sp.csr_matrix([[1.0, 1.0]]), [-1.0, -2.0], [-np.inf], [1.0],
                     [0.0, 0.0], [np.inf, np.inf], name="lp1")


@pytest.fixture
def infeasible_1var():
    """x <= -1 as a row, x >= 0 as a bound."""
    return LpProblem(sp.csr_matrix([[1.0]]), [0.0], [-np.inf], [-1.0], [0.0], [np.inf],
                     name="infeasible")


@pytest.fixture
def unbounded_1var():
    """min -x  s.t.  x >= 0 as a row and as a bound."""
    return LpProblem(sp.csr_matrix([[1.0]]), [-1.0], [0.0], [np.inf], [0.0], [np.inf],
                     name="unbounded")


def pytest_terminal_summary(terminalreporter):
    import acceptance_log

    if acceptance_log.LINES:
        terminalreporter.section("acceptance criteria")
        for line in acceptance_log.LINES:
            terminalreporter.write_line(line)
