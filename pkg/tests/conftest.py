import pytest

from basinshadow.basin import disk_grid, extract_immediate_basin
from basinshadow.polycore import Polynomial

GEOM_BOX = (-1.2, 1.0, -1.1, 1.1)


@pytest.fixture(scope="session")
def geom_poly():
    return Polynomial([0, 0.3, 1])


@pytest.fixture(scope="session")
def geom_grid(geom_poly):
    return extract_immediate_basin(geom_poly, GEOM_BOX, 512)


@pytest.fixture(scope="session")
def disk512():
    return disk_grid(512)


@pytest.fixture(scope="session")
def disk1024():
    return disk_grid(1024)


_PRESET_RUNS = {}


@pytest.fixture(scope="session")
def preset_report():
    """Run each preset once per session and share the report between test modules."""
    from basinshadow.lab import load_scenario, run_scenario

    def get(name, accept=False):
        key = (name, accept)
        if key not in _PRESET_RUNS:
            _PRESET_RUNS[key] = run_scenario(load_scenario(name), accept_heuristic_parabolic=accept)
        return _PRESET_RUNS[key]

    return get


ACCEPTANCE_LINES: dict[int, str] = {}


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for k in sorted(ACCEPTANCE_LINES):
            terminalreporter.write_line(ACCEPTANCE_LINES[k])
