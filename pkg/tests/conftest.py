_ACCEPTANCE = []


def pytest_runtest_logreport(report):
    if report.when != "call":
        return
    for name, value in report.user_properties:
        if name == "criterion":
            _ACCEPTANCE.append(("PASS" if report.passed else "FAIL", value))


def pytest_terminal_summary(terminalreporter):
    if not _ACCEPTANCE:
        return
    terminalreporter.section("acceptance criteria")
    for status, line in sorted(_ACCEPTANCE, key=lambda r: r[1]):
        terminalreporter.write_line(f"{status}  {line}")
