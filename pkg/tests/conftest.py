"""Shared pytest hooks: acceptance-suite pass/fail summary lines."""

_ACCEPTANCE = {}


def pytest_runtest_logreport(report):
    if "test_acceptance.py" in report.nodeid and report.when == "call":
        name = report.nodeid.split("::")[-1]
        _ACCEPTANCE[name] = report.outcome


def pytest_terminal_summary(terminalreporter):
    if not _ACCEPTANCE:
        return
    terminalreporter.write_line("")
    terminalreporter.write_line("acceptance summary:")
    for name in sorted(_ACCEPTANCE):
        outcome = _ACCEPTANCE[name]
        label = "PASS" if outcome == "passed" else outcome.upper()
        terminalreporter.write_line(f"  {name}: {label}")
