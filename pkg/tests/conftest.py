"""Shared pytest wiring.

The acceptance suite registers one summary line per criterion; they are
echoed in the terminal summary so every run ends with an explicit
pass/fail line for each criterion.
"""

ACCEPTANCE_LINES: dict = {}


def record_acceptance(number: int, name: str, passed: bool, detail: str = ""):
    status = "PASS" if passed else "FAIL"
    line = f"ACCEPTANCE {number:2d} [{name}]: {status}"
    if detail:
        line += f" -- {detail}"
    ACCEPTANCE_LINES[number] = line
    print(line)


def pytest_terminal_summary(terminalreporter):
    if not ACCEPTANCE_LINES:
        return
    terminalreporter.section("acceptance criteria")
    for number in sorted(ACCEPTANCE_LINES):
        terminalreporter.write_line(ACCEPTANCE_LINES[number])
