"""Shared pytest plumbing for the acceptance gate.

The acceptance tests append one verdict per criterion; the hook below prints
them as a block after the normal pytest summary so a full run always ends
with an explicit per-criterion PASS/FAIL table.
"""

import pytest

ACCEPTANCE_VERDICTS: list[tuple] = []


@pytest.fixture(scope="session")
def acceptance_verdicts():
    return ACCEPTANCE_VERDICTS


def pytest_terminal_summary(terminalreporter, exitstatus, config):
    if not ACCEPTANCE_VERDICTS:
        return
    terminalreporter.ensure_newline()
    terminalreporter.section("acceptance criteria")
    for name, ok, detail in ACCEPTANCE_VERDICTS:
        status = "SKIP" if ok is None else ("PASS" if ok else "FAIL")
        terminalreporter.write_line(f"{name}: {status} ({detail})")
