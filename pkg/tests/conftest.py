import contextlib
import hashlib

import pytest

from rvmon.traceio import trace_lines

ACCEPTANCE_KEY = pytest.StashKey[list]()


def pytest_configure(config):
    config.stash[ACCEPTANCE_KEY] = []


@pytest.fixture
def criterion(request):
    """Record one PASS/FAIL line for an acceptance criterion.

    Lines are printed immediately (visible with ``-s``) and again in the
    terminal summary.
    """
    lines = request.config.stash[ACCEPTANCE_KEY]

    @contextlib.contextmanager
    def check(number: int, title: str):
        try:
            yield
        except BaseException as exc:
            line = f"criterion {number:>2} FAIL  {title}  ({type(exc).__name__}: {str(exc).splitlines()[0] if str(exc) else ''})"
            lines.append((number, line))
            print(line)
            raise
        line = f"criterion {number:>2} PASS  {title}"
        lines.append((number, line))
        print(line)

    return check


def pytest_terminal_summary(terminalreporter, exitstatus, config):
    lines = config.stash.get(ACCEPTANCE_KEY, [])
    if lines:
        terminalreporter.section("acceptance criteria")
        for _, line in sorted(lines):
            terminalreporter.write_line(line)


def trace_digest(trace: dict) -> str:
    return hashlib.sha256("\n".join(trace_lines(trace.values())).encode()).hexdigest()
