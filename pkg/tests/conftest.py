"""Pytest hooks shared by the suite.

Replays the acceptance-gate verdict lines after the run summary. The
acceptance tests append one line per gate to support.ACCEPTANCE_LINES
while they execute; printing them here keeps them out of the per-test
capture buffers and guarantees they show up once, at the end, in any
logged run.
"""

from support import ACCEPTANCE_LINES


def pytest_terminal_summary(terminalreporter, exitstatus, config):
    if not ACCEPTANCE_LINES:
        return
    terminalreporter.section("acceptance criteria")
    for line in ACCEPTANCE_LINES:
        terminalreporter.write_line(line)
