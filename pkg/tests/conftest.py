import os
import sys

import pytest

sys.path.insert(0, os.path.dirname(__file__))

from malleability.dynamics import SimulationConfig  # noqa: E402

N_CRITERIA = 11
_criteria: dict[int, tuple[bool, str]] = {}
_acceptance_ran = False


@pytest.fixture
def short_sim():
    """Short windows for functional tests; physics checks use longer ones."""
    return SimulationConfig(eps=2.0, t_transient=20.0, t_observe=20.0, dt_sample=0.1)


@pytest.fixture
def criterion():
    """``criterion(number, passed, detail)`` records one acceptance line for the summary."""
    global _acceptance_ran
    _acceptance_ran = True

    def record(number: int, passed: bool, detail: str) -> None:
        ok, prev = _criteria.get(number, (True, ""))
        _criteria[number] = (ok and bool(passed), f"{prev}; {detail}" if prev else detail)

    return record


def pytest_terminal_summary(terminalreporter):
    if not _acceptance_ran:
        return
    terminalreporter.section("acceptance criteria")
    for n in range(1, N_CRITERIA + 1):
        ok, detail = _criteria.get(n, (False, "not evaluated (deselected, or errored before the check)"))
        terminalreporter.write_line(f"criterion {n:2d}: {'PASS' if ok else 'FAIL'}  {detail}")
