"""Shared test configuration.

Hypothesis runs derandomized so the suite is reproducible; the
acceptance module records one line per criterion and the terminal
summary reprints them after the run.
"""
from hypothesis import settings

settings.register_profile("deterministic", derandomize=True,
                          max_examples=25, deadline=None)
settings.load_profile("deterministic")

ACCEPTANCE_LINES = []


def record_criterion(number: int, name: str, passed: bool,
                     detail: str = "") -> str:
    state = "PASS" if passed else "FAIL"
    line = f"[{state}] criterion {number}: {name}"
    if detail:
        line += f" ({detail})"
    ACCEPTANCE_LINES.append(line)
    print(line)
    return line


def record_skip(number: int, name: str, reason: str) -> None:
    line = f"[SKIP] criterion {number}: {name} ({reason})"
    ACCEPTANCE_LINES.append(line)
    print(line)


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in ACCEPTANCE_LINES:
            terminalreporter.write_line(line)
