import sys

import pytest

from hodgelocus.instance import fixture_names, load_fixture

FIXTURES = tuple(fixture_names())


@pytest.fixture(scope="session")
def instances():
    return {name: load_fixture(name) for name in FIXTURES}


@pytest.fixture(scope="session")
def k3(instances):
    return instances["i_k3"]


@pytest.fixture(scope="session")
def cy5(instances):
    return instances["i_cy5"]


def pytest_terminal_summary(terminalreporter):
    mods = [m for k, m in sys.modules.items() if k.split(".")[-1] == "test_acceptance"]
    lines = getattr(mods[0], "LINES", None) if mods else None
    if lines:
        terminalreporter.section("acceptance criteria")
        for n in sorted(lines):
            terminalreporter.write_line(lines[n])
