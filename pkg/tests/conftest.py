import numpy as np
import pytest

from vstates.continuation import continue_branch
from vstates.spectral import ModeVector

K = 16


@pytest.fixture(scope="session")
def branches():
    """m = 3, 4, 5 branches continued from the disc to xi = 0.1."""
    return {m: continue_branch(m, 0.1, 0.02, K=K) for m in (3, 4, 5)}


@pytest.fixture(scope="session")
def m3_state(branches):
    return branches[3].states[-1]


@pytest.fixture(scope="session")
def ellipse():
    xi = 0.3
    return ModeVector.single(2, K, xi), 0.5 * (1 + xi * xi)


@pytest.fixture(scope="session")
def disc():
    return ModeVector.zeros(2, K), 0.5


def random_mv(rng, fold, trunc=6, budget=0.5):
    """Random real mode vector with derivative bound ``budget``."""
    c = rng.standard_normal(trunc) * np.exp(-np.arange(trunc))
    mv = ModeVector(fold, c)
    return mv * (budget / mv.derivative_bound)


def pytest_terminal_summary(terminalreporter):
    import sys

    mod = sys.modules.get("test_acceptance")
    if mod and mod.RESULTS:
        terminalreporter.section("acceptance criteria")
        for n in sorted(mod.RESULTS):
            terminalreporter.write_line(mod.RESULTS[n])
