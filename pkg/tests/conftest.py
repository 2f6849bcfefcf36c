import numpy as np
import pytest

from lfp.sampling import make_generator


@pytest.fixture
def rng():
    return make_generator(20240611)


def within_sigma(x, target, sigma, k=3.0):
    return abs(x - target) <= k * sigma


_ACCEPTANCE_KEY = pytest.StashKey[list]()


def pytest_configure(config):
    config.stash[_ACCEPTANCE_KEY] = []


@pytest.fixture
def acceptance(request):
    """Record one ``PASS``/``FAIL`` line per acceptance criterion.

    Call the returned function with the criterion number, a boolean and a
    short detail string; it prints the line, stores it for the terminal
    summary, and returns the boolean so the test can assert on it.
    """
    log = request.config.stash[_ACCEPTANCE_KEY]

    def record(number: int, ok: bool, detail: str) -> bool:
        line = f"{'PASS' if ok else 'FAIL'} criterion {number}: {detail}"
        print(line)
        log.append((number, line))
        return ok

    return record


def pytest_terminal_summary(terminalreporter, exitstatus, config):
    log = config.stash.get(_ACCEPTANCE_KEY, [])
    if not log:
        return
    terminalreporter.section("acceptance criteria")
    for _, line in sorted(log, key=lambda t: t[0]):
        terminalreporter.write_line(line)
