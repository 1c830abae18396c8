import numpy as np
import pytest

from fracplap.config import ProblemConfig, RunConfig
from fracplap.problem import Nonlinearity

ACCEPTANCE_LINES: list[str] = []


def reference_problem(N: int = 256) -> ProblemConfig:
    return ProblemConfig(0.75, 2.0, 1.0, N, Nonlinearity.power(1.5, 1.0, T=1.0))


@pytest.fixture(scope="session")
def ref_problem():
    return reference_problem()


@pytest.fixture(scope="session")
def ref_ctx(ref_problem):
    return ref_problem.context()


@pytest.fixture(scope="session")
def ref_config(ref_problem):
    return RunConfig(problem=ref_problem, mode="verify")


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in ACCEPTANCE_LINES:
            terminalreporter.write_line(line)
