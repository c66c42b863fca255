import os
import sys

sys.path.insert(0, os.path.dirname(__file__))

# lines appended by test_acceptance, one per criterion
ACCEPTANCE: list[str] = []


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE:
        terminalreporter.section("acceptance criteria")
        for line in sorted(ACCEPTANCE):
            terminalreporter.write_line(line)
