import math

import pytest

from equiharmonic.grid import Grid
from equiharmonic.problems import get_builtin


@pytest.fixture(scope="session")
def grid():
    return Grid(math.pi, 1024)


@pytest.fixture(scope="session")
def builtins():
    return {name: get_builtin(name) for name in ("fig1", "fig2", "fig3", "higher-ev")}


_CRITERIA = pytest.StashKey[dict]()


def pytest_configure(config):
    config.stash[_CRITERIA] = {}


@pytest.fixture(scope="session")
def criterion(request):
    """Record and print one pass/fail line per acceptance criterion."""
    lines = request.config.stash[_CRITERIA]

    def report(number: int, ok: bool, detail: str):
        line = f"criterion {number:>2}: {'PASS' if ok else 'FAIL'}  {detail}"
        lines[number] = line
        print(line)
        return ok

    return report


def pytest_terminal_summary(terminalreporter, exitstatus, config):
    lines = config.stash.get(_CRITERIA, {})
    if lines:
        terminalreporter.section("acceptance criteria")
        for n in sorted(lines):
            terminalreporter.write_line(lines[n])
