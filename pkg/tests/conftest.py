"""Repeat the acceptance verdict lines after the run, uncaptured."""

import sys


def pytest_terminal_summary(terminalreporter):
    mod = sys.modules.get("test_acceptance")
    if mod is None or not getattr(mod, "VERDICTS", None):
        return
    terminalreporter.section("acceptance verdicts")
    for line in mod.VERDICTS:
        terminalreporter.write_line(line)
