import numpy as np
import pytest

from roomtrack import dataset, simulator
from roomtrack.geometry import bundled_plan


@pytest.fixture(scope="session")
def office():
    return bundled_plan("office")


@pytest.fixture(scope="session")
def apartment():
    return bundled_plan("apartment")


@pytest.fixture(scope="session")
def office_dense(office):
    """200 rows per room, sigma 4 dB, seed 1."""
    raw = simulator.collect_survey(office, 200, simulator.RadioModel(seed=1))
    return dataset.impute(raw)


@pytest.fixture(scope="session")
def apartment_dense(apartment):
    raw = simulator.collect_survey(apartment, 200, simulator.RadioModel(seed=1))
    return dataset.impute(raw)


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


def pytest_terminal_summary(terminalreporter):
    """One line per acceptance criterion with the measured values."""
    reports = [r for key in ("passed", "failed") for r in terminalreporter.stats.get(key, [])
               if r.when == "call" and "test_acceptance.py" in r.nodeid]
    if not reports:
        return
    terminalreporter.section("acceptance criteria")
    for r in sorted(reports, key=lambda r: r.nodeid):
        name = r.nodeid.split("::")[-1]
        detail = "; ".join(v for k, v in r.user_properties if k == "detail")
        terminalreporter.write_line(f"{'PASS' if r.passed else 'FAIL'}  {name}  {detail}")
