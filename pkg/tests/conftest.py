import warnings
from pathlib import Path

import pytest

from dualpole.biphoton import make_device
from dualpole.dispersion import PolarizationMapping, builtin_material
from dualpole.phasematch import DesignTargets, design_source

CONFIG_DIR = Path(__file__).resolve().parent.parent / "configs"

# filled by tests/test_acceptance.py, printed at the end of the session
ACCEPTANCE_LINES = []


def pytest_terminal_summary(terminalreporter):
    if not ACCEPTANCE_LINES:
        return
    terminalreporter.section("acceptance criteria")
    for line in ACCEPTANCE_LINES:
        terminalreporter.write_line(line)


@pytest.fixture(scope="session")
def ktp():
    return builtin_material("ktp")


@pytest.fixture(scope="session")
def mapping():
    return PolarizationMapping()


@pytest.fixture(scope="session")
def degenerate_design(ktp, mapping):
    return design_source(ktp, mapping, DesignTargets(0.655))


@pytest.fixture(scope="session")
def nondegenerate_design(ktp, mapping):
    return design_source(ktp, mapping, DesignTargets(0.532, 0.8073))


@pytest.fixture(scope="session")
def degenerate_device(ktp, mapping, degenerate_design):
    with warnings.catch_warnings():
        warnings.simplefilter("error")
        return make_device(ktp, mapping, degenerate_design, 0.02, 3.9)


@pytest.fixture(scope="session")
def nondegenerate_device(ktp, mapping, nondegenerate_design):
    with warnings.catch_warnings():
        warnings.simplefilter("error")
        return make_device(ktp, mapping, nondegenerate_design, 0.02, 3.9)
