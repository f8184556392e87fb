import numpy as np
import pytest

from eulervar.distributions import GPD, LogNormal, Normal
from eulervar.models import ArchimedeanCopulaModel, Clayton, GaussianLinearModel, IndependentModel

DESK_L = np.array([[1.0, 0.0, 0.0], [0.5, 0.7, 0.0], [1.0, 0.8, 1.1]])


@pytest.fixture
def desk_L():
    return DESK_L.copy()


@pytest.fixture
def gaussian_model():
    return GaussianLinearModel(np.zeros(3), DESK_L, tag="gaussian-3")


@pytest.fixture
def lognormal_model():
    return IndependentModel([LogNormal(0.0, s) for s in (0.5, 1.0, 2.0)], tag="lognormal-3")


@pytest.fixture
def clayton_normal_model():
    return ArchimedeanCopulaModel(Clayton(2.0), [Normal(0.0, s) for s in (1.0, 0.5, 1.0)],
                                  tag="clayton-normal-3")


@pytest.fixture
def survival_gpd_model():
    return ArchimedeanCopulaModel(Clayton(2.0), [GPD(0.3, 1.0)] * 3, survival=True,
                                  tag="survival-clayton-gpd-3")


@pytest.fixture
def rng():
    return np.random.default_rng(20240611)


ACCEPTANCE_LINES: list[str] = []


@pytest.fixture
def acceptance_report():
    """Record one PASS/FAIL line for an acceptance criterion and assert it."""

    def report(number: int, title: str, ok: bool, detail: str = ""):
        line = f"AC{number:<2} {'PASS' if ok else 'FAIL'}  {title}" + (f"  [{detail}]" if detail else "")
        ACCEPTANCE_LINES.append(line)
        print(line)
        assert ok, line

    return report


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in ACCEPTANCE_LINES:
            terminalreporter.write_line(line)
