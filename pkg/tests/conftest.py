import numpy as np
import pytest

from dtwin.dynamics import HarmonicLoad
from dtwin.lumped import DamageScenario, LumpedParameters, apply_damage, build_lumped, default_scenarios

ACCEPTANCE_LINES = []


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in ACCEPTANCE_LINES:
            terminalreporter.write_line(line)


@pytest.fixture
def nominal():
    return LumpedParameters()


@pytest.fixture
def healthy_sys(nominal):
    return build_lumped(nominal, apply_damage(DamageScenario.healthy_state(), nominal.stiffness))


@pytest.fixture
def tip_load():
    return HarmonicLoad(6, 1e4)


def lumped_system(scenario, params=None):
    params = params or LumpedParameters()
    return build_lumped(params, apply_damage(scenario, params.stiffness))


@pytest.fixture
def all_configurations(nominal):
    """Healthy plus the five d = 20% single-spring systems."""
    return [lumped_system(s, nominal) for s in default_scenarios(0.20)]


@pytest.fixture
def rng():
    return np.random.default_rng(12345)
