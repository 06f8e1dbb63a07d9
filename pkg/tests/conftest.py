import sys

import pytest

from r4bp.equilibria import find_l2
from r4bp.linstab import find_mu_b
from r4bp.model import SystemConfig
from r4bp.normal_form import compute_normal_form


@pytest.fixture(scope="session")
def cfg019():
    return SystemConfig(0.019)


@pytest.fixture(scope="session")
def l2_019(cfg019):
    return find_l2(cfg019)


@pytest.fixture(scope="session")
def critical():
    return find_mu_b()


@pytest.fixture(scope="session")
def nf_computed(critical):
    return compute_normal_form("computed", critical)


@pytest.fixture(scope="session")
def nf_rounded(critical):
    return compute_normal_form("rounded", critical)


def pytest_terminal_summary(terminalreporter):
    mod = sys.modules.get("test_acceptance")
    if not mod or not mod.RESULTS:
        return
    terminalreporter.section("acceptance criteria")
    for k in sorted(mod.RESULTS):
        terminalreporter.write_line(mod.report_line(k))
