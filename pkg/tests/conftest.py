import contextlib
import time

import pytest

_RESULTS = {}


class _Report:
    def __init__(self):
        self.detail = ""


@pytest.fixture
def criterion():
    """Context manager recording a PASS/FAIL line for an acceptance criterion."""

    @contextlib.contextmanager
    def run(number, title):
        rep = _Report()
        start = time.perf_counter()
        try:
            yield rep
        except BaseException:
            _RESULTS[number] = ("FAIL", title, rep.detail, time.perf_counter() - start)
            raise
        _RESULTS[number] = ("PASS", title, rep.detail, time.perf_counter() - start)

    return run


def pytest_terminal_summary(terminalreporter):
    if not _RESULTS:
        return
    terminalreporter.section("acceptance criteria")
    for number in sorted(_RESULTS):
        status, title, detail, secs = _RESULTS[number]
        line = f"criterion {number}: {status} {title} ({secs:.1f} s)"
        terminalreporter.write_line(line + (f" | {detail}" if detail else ""))
