"""Pytest plumbing for the trainer suite: acceptance checklist output."""

from _emb_acceptance_log import ACCEPTANCE_LINES


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria (embedder)")
        for line in ACCEPTANCE_LINES:
            terminalreporter.write_line(line)
