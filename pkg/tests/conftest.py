import sys
from pathlib import Path

sys.path.insert(0, str(Path(__file__).parent))

ACCEPTANCE: dict[int, str] = {}


def record(criterion: int, status, detail: str) -> None:
    """Remember and print the outcome line of one acceptance criterion."""
    if isinstance(status, bool):
        status = "PASS" if status else "FAIL"
    line = f"criterion {criterion}: {status}  {detail}"
    ACCEPTANCE[criterion] = line
    print(line)


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE:
        terminalreporter.section("acceptance criteria")
        for key in sorted(ACCEPTANCE):
            terminalreporter.write_line(ACCEPTANCE[key])
