"""Shared pytest plumbing.

The acceptance suite appends one line per criterion here; the summary
hook replays them at the end of the run so the verdicts survive output
capture.
"""

ACCEPTANCE_LINES: list[str] = []


def pytest_terminal_summary(terminalreporter, exitstatus, config):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in ACCEPTANCE_LINES:
            terminalreporter.write_line(line)
