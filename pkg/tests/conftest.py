from __future__ import annotations

import pytest

_KEY = "_acceptance_lines"


@pytest.fixture
def criterion(request):
    """Record one acceptance line; the lines are printed in the terminal summary."""
    lines = getattr(request.config, _KEY, None)
    if lines is None:
        lines = []
        setattr(request.config, _KEY, lines)

    def record(number: int, ok: bool, detail: str) -> bool:
        lines.append((number, ok, detail))
        return ok

    return record


def pytest_terminal_summary(terminalreporter, exitstatus, config):
    lines = getattr(config, _KEY, None)
    if not lines:
        return
    terminalreporter.section("acceptance criteria")
    for number, ok, detail in sorted(lines):
        terminalreporter.write_line(f"criterion {number}: {'PASS' if ok else 'FAIL'}  {detail}")
