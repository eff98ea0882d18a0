"""Pytest wiring: collects acceptance verdict lines and prints them at the end."""

_verdicts = []


def record_verdict(line):
    _verdicts.append(line)
    print(line)


def pytest_terminal_summary(terminalreporter):
    if _verdicts:
        terminalreporter.section("acceptance criteria")
        for line in _verdicts:
            terminalreporter.write_line(line)
