import os
import sys

sys.path.insert(0, os.path.join(os.path.dirname(__file__), "..", "src"))

ACCEPTANCE_RESULTS = []


def record(criterion: str, passed: bool, detail: str = ""):
    ACCEPTANCE_RESULTS.append((criterion, passed, detail))


def pytest_terminal_summary(terminalreporter, exitstatus, config):
    if not ACCEPTANCE_RESULTS:
        return
    terminalreporter.section("acceptance criteria")
    for name, passed, detail in ACCEPTANCE_RESULTS:
        status = "PASS" if passed else "FAIL"
        line = f"{status}  {name}"
        if detail:
            line += f"  [{detail}]"
        terminalreporter.write_line(line)
