import numpy as np
import pytest

_ACCEPTANCE_KEY = pytest.StashKey[list]()


@pytest.fixture
def rng():
    return np.random.default_rng(20240611)


def pytest_configure(config):
    config.stash[_ACCEPTANCE_KEY] = []


@pytest.fixture
def criterion(request):
    """``criterion(n, ok, detail)`` records a PASS/FAIL line and asserts ``ok``."""
    lines = request.config.stash[_ACCEPTANCE_KEY]

    def record(number: int, ok: bool, detail: str):
        lines.append((number, bool(ok), detail))
        assert ok, f"criterion {number}: {detail}"

    return record


def pytest_terminal_summary(terminalreporter, config):
    lines = sorted(config.stash[_ACCEPTANCE_KEY])
    if not lines:
        return
    terminalreporter.section("acceptance criteria")
    for number, ok, detail in lines:
        terminalreporter.write_line(f"criterion {number:2d}: {'PASS' if ok else 'FAIL'}  {detail}")
