"""Shared test plumbing: collects acceptance-criterion verdicts and prints
them as one PASS/FAIL line each at the end of the run."""

from __future__ import annotations

import pytest

_verdicts: list[str] = []


@pytest.fixture()
def accept():
    """Record a criterion verdict, then enforce it."""

    def _record(criterion: str, ok: bool, detail: str) -> None:
        _verdicts.append(f"{'PASS' if ok else 'FAIL'}  {criterion}: {detail}")
        assert ok, f"{criterion}: {detail}"

    return _record


def pytest_terminal_summary(terminalreporter, exitstatus, config):
    if not _verdicts:
        return
    terminalreporter.section("acceptance criteria")
    for line in _verdicts:
        terminalreporter.write_line(line)
