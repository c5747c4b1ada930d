"""Shared pytest plumbing: surface acceptance checklist lines.

The acceptance tests record one status line per criterion; emitting them
from a terminal-summary hook keeps them visible without -s.
"""

from _acceptance_log import ACCEPTANCE_LINES


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in ACCEPTANCE_LINES:
            terminalreporter.write_line(line)
