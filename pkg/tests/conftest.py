"""Shared pytest configuration.

Acceptance tests record one pass/fail line per criterion through the
``criterion`` fixture; the lines are printed in the terminal summary so
they appear in plain ``pytest -v`` output (not only with ``-s``).
"""

from __future__ import annotations

import pytest
from hypothesis import settings

settings.register_profile("default", max_examples=40, deadline=None)
settings.load_profile("default")

_LINES: dict[int, str] = {}


class _Recorder:
    def __call__(self, number: int, name: str, passed: bool, detail: str) -> bool:
        line = f"criterion {number:>2} [{'PASS' if passed else 'FAIL'}] {name}: {detail}"
        _LINES[number] = line
        print(line)
        return passed


@pytest.fixture
def criterion():
    return _Recorder()


def pytest_terminal_summary(terminalreporter):
    if not _LINES:
        return
    terminalreporter.section("acceptance criteria")
    for n in sorted(_LINES):
        terminalreporter.write_line(_LINES[n])
