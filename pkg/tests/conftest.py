import pytest

from sublln import AmbiguitySet, SymmetricPareto, bernoulli, point_mass, two_point


@pytest.fixture
def bern_pair():
    return AmbiguitySet((bernoulli(0.3), bernoulli(0.7)))


@pytest.fixture
def pareto19():
    return SymmetricPareto(1.9, 1.0)


@pytest.fixture
def rademacher():
    return two_point(-1.0, 1.0)


@pytest.fixture
def signs():
    return AmbiguitySet((point_mass(-1.0), point_mass(1.0)))


ACCEPTANCE_LINES: list[str] = []


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in ACCEPTANCE_LINES:
            terminalreporter.write_line(line)
