import os
from pathlib import Path

import pytest
from hypothesis import HealthCheck, settings

from dssbound.model import DssParams, enumerate_universe
from dssbound.reduce import ClosureOracle

settings.register_profile("default", deadline=None, max_examples=60,
                          suppress_health_check=[HealthCheck.too_slow])
settings.register_profile("thorough", deadline=None, max_examples=500)
settings.load_profile(os.environ.get("HYPOTHESIS_PROFILE", "default"))

FIXTURES = Path(__file__).parent / "fixtures"


@pytest.fixture(scope="session")
def u322():
    return enumerate_universe(DssParams(3, 2, 2))


@pytest.fixture(scope="session")
def oracle322(u322):
    return ClosureOracle.for_universe(u322)


@pytest.fixture(scope="session")
def u433():
    return enumerate_universe(DssParams(4, 3, 3))


@pytest.fixture(scope="session")
def oracle433(u433):
    return ClosureOracle.for_universe(u433)


@pytest.fixture
def fixtures_dir():
    return FIXTURES


ACCEPTANCE = pytest.StashKey[list]()


@pytest.fixture
def criterion(request):
    """Record one PASS/FAIL line per acceptance criterion; shown in the terminal summary."""
    lines = request.config.stash.setdefault(ACCEPTANCE, [])

    def record(label, ok, detail):
        line = f"{'PASS' if ok else 'FAIL'}  {label}: {detail}"
        lines.append(line)
        print(line)
        return ok

    return record


def pytest_terminal_summary(terminalreporter, config):
    lines = config.stash.get(ACCEPTANCE, [])
    if lines:
        terminalreporter.write_sep("=", "acceptance criteria")
        for line in lines:
            terminalreporter.write_line(line)
