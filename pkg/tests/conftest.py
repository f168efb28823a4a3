import sys
from pathlib import Path

sys.path.insert(0, str(Path(__file__).parent))

_REPORT: list = []


def report(line: str) -> None:
    """Record an acceptance line; all of them are printed at the end of the run."""
    _REPORT.append(line)
    print(line)


def pytest_terminal_summary(terminalreporter):
    if _REPORT:
        terminalreporter.section("acceptance criteria")
        for line in _REPORT:
            terminalreporter.write_line(line)
