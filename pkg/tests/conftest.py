import pytest

from mgframes.engine import ScenarioConfig, run_scenario
from mgframes.plant import PlantParams


@pytest.fixture(scope="session")
def runs():
    """Default 0.5 s runs keyed by (frame, fsw), computed lazily."""
    cache = {}

    def get(frame, fsw):
        key = (frame, fsw)
        if key not in cache:
            cache[key] = run_scenario(ScenarioConfig(frame=frame, plant=PlantParams(fsw=fsw)))
        return cache[key]

    return get


ACCEPTANCE_LINES = []


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in ACCEPTANCE_LINES:
            terminalreporter.write_line(line)
