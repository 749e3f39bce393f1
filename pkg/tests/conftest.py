"""Shared fixtures. Heavy release curves are computed once per session."""

import numpy as np
import pytest

from laminate_fracture.homogenization import (StudyConfig, compute_curves,
                                              effective_toughness_estimate,
                                              evolution_convergence)
from laminate_fracture.materials import LaminateSpec, MaterialPhase, ref1
from laminate_fracture.mesh import MeshParams
from laminate_fracture.release import release_curve

# criterion number -> (status, detail); filled by test_acceptance
ACCEPTANCE = {}


def record(criterion: int, passed: bool, detail: str) -> str:
    status = "PASS" if passed else "FAIL"
    line = f"criterion {criterion:2d}: {status}  {detail}"
    ACCEPTANCE[criterion] = (status, detail)
    print(line)
    return line


def pytest_terminal_summary(terminalreporter):
    if not ACCEPTANCE:
        return
    terminalreporter.section("acceptance criteria")
    for k in sorted(ACCEPTANCE):
        status, detail = ACCEPTANCE[k]
        terminalreporter.write_line(f"criterion {k:2d}: {status}  {detail}")


SMALL = MeshParams(elems_per_layer_x=4, elems_y=4)


def homogeneous(n_layers=1, phase=MaterialPhase(1.0, 1.0, 1.0), orientation="vertical"):
    return LaminateSpec(1.0, 0.5, n_layers, 0.5, phase, phase, orientation)


@pytest.fixture(scope="session")
def ref1_n2_curve():
    return release_curve(ref1(n_layers=2), MeshParams(), threads=4)


@pytest.fixture(scope="session")
def ref1_n8_curve():
    return release_curve(ref1(n_layers=8), MeshParams(), threads=4)


class Study:
    def __init__(self, config):
        self.config = config
        self.curves = compute_curves(config)
        self.estimates = effective_toughness_estimate(config, self.curves)
        self.convergence = evolution_convergence(config, curves=self.curves,
                                                 estimates=self.estimates)


@pytest.fixture(scope="session")
def ref1_study():
    """REF-1 vertical, n = 2, 4, 8, 16 on the default mesh (about a minute)."""
    return Study(StudyConfig(ref1(), threads=4))


@pytest.fixture(scope="session")
def horizontal_study():
    return Study(StudyConfig(ref1("horizontal"), n_list=(2, 4, 8), threads=4))


@pytest.fixture
def rng():
    return np.random.default_rng(20261016)
