import time

import pytest

_LINES = pytest.StashKey[list]()


def pytest_configure(config):
    config.stash[_LINES] = []


@pytest.fixture
def criterion(request):
    """Return a reporter that prints one PASS/FAIL line and then asserts it."""
    start = time.perf_counter()
    lines = request.config.stash[_LINES]

    def report(label, ok, detail, limit=None):
        elapsed = time.perf_counter() - start
        in_time = limit is None or elapsed < limit
        status = "PASS" if ok and in_time else "FAIL"
        budget = "" if limit is None else f" (limit {limit:g} s)"
        line = f"{status} criterion {label}: {detail} [{elapsed:.2f} s{budget}]"
        lines.append(line)
        print(line, flush=True)
        assert ok, line
        assert in_time, line

    return report


def pytest_terminal_summary(terminalreporter, config):
    lines = config.stash[_LINES]
    if lines:
        terminalreporter.section("acceptance criteria")
        for line in lines:
            terminalreporter.write_line(line)
