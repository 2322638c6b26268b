import sys
import time

import pytest

_CRITERION_LINES: list[str] = []


def record_criterion(number: int, name: str, passed: bool, detail: str) -> None:
    """One summary line per acceptance criterion, kept for the run footer."""
    verdict = "PASS" if passed else "FAIL"
    line = f"ACCEPTANCE {number:02d} {verdict} {name}: {detail}"
    _CRITERION_LINES.append(line)
    print(line, file=sys.stderr, flush=True)


def pytest_terminal_summary(terminalreporter):
    if not _CRITERION_LINES:
        return
    terminalreporter.section("acceptance criteria")
    for line in _CRITERION_LINES:
        terminalreporter.write_line(line)


class BundledRuns:
    """Session cache of closed-loop runs of the bundled scenarios.

    Several criteria exercise the same scenario; the first caller pays for
    the run and later callers reuse the result. Determinism checks ask for
    a fresh run explicitly.
    """

    def __init__(self):
        self._cache = {}

    def run(self, name: str, governor: bool | None = None, fresh: bool = False):
        from shiftgov.scenario import load_bundled
        from shiftgov.simulation import run

        key = (name, governor)
        if fresh or key not in self._cache:
            t0 = time.perf_counter()
            log, metrics = run(load_bundled(name), governor_enabled=governor)
            wall = time.perf_counter() - t0
            result = (log, metrics, wall)
            if not fresh or key not in self._cache:
                self._cache[key] = result
            return result
        return self._cache[key]


@pytest.fixture(scope="session")
def bundled():
    return BundledRuns()
