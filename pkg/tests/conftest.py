import sys


def pytest_terminal_summary(terminalreporter, exitstatus, config):
    """Echo the one-line acceptance verdicts after the normal summary.

    The acceptance module collects its printed lines in REPORT; surfacing
    them here keeps them visible without -s.
    """
    mod = sys.modules.get("test_acceptance")
    report = getattr(mod, "REPORT", None) if mod else None
    if not report:
        return
    terminalreporter.section("acceptance criteria")
    for line in report:
        terminalreporter.write_line(line)
