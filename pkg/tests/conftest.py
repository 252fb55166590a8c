import numpy as np
import pytest

from flexjoint.dynamics import ArmGeometry, TwoLinkArm
from flexjoint.nonlinear import FrictionParams, HysteresisParams
from flexjoint.plant import PlantParams

NO_FRICTION = FrictionParams(Fc=0.0, Fs=0.0, B=0.0)
LINEAR_SPRING = HysteresisParams(w=1.0, k3=0.0)


@pytest.fixture
def arm():
    return TwoLinkArm()


@pytest.fixture
def printed_arm():
    """h11 with the m/2 second-link mass, as tabulated."""
    return TwoLinkArm(ArmGeometry(h11_mass_ratio=0.5))


@pytest.fixture
def plant():
    return PlantParams()


def conservative_plant(**geometry) -> PlantParams:
    """Friction, damping and plasticity switched off."""
    return PlantParams(
        geometry=ArmGeometry(**geometry),
        friction=(NO_FRICTION, NO_FRICTION),
        hysteresis=(LINEAR_SPRING, LINEAR_SPRING),
        D=(0.0, 0.0),
    )


@pytest.fixture
def rng():
    return np.random.default_rng(20240611)


ACCEPTANCE_KEY = pytest.StashKey[list]()


def pytest_configure(config):
    config.stash[ACCEPTANCE_KEY] = []


@pytest.fixture
def verdict(request):
    """Record one acceptance line: verdict(number, passed, detail)."""
    lines = request.config.stash[ACCEPTANCE_KEY]

    def record(number, passed, detail):
        line = f"criterion {number:>2}: {'PASS' if passed else 'FAIL'}  {detail}"
        lines.append(line)
        print(line)
        return passed

    return record


def pytest_terminal_summary(terminalreporter, exitstatus, config):
    lines = config.stash.get(ACCEPTANCE_KEY, [])
    if lines:
        terminalreporter.section("acceptance criteria")
        for line in sorted(lines, key=lambda s: int(s.split(":")[0].split()[1])):
            terminalreporter.write_line(line)
