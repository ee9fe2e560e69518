import re
import sys


def _criterion_key(line: str):
    num, sub = re.search(r"\[(\d+)(\w*)\]", line).groups()
    return int(num), sub


def pytest_terminal_summary(terminalreporter):
    # print the acceptance lines at the end of any run that included the gate
    mod = sys.modules.get("test_acceptance") or sys.modules.get("tests.test_acceptance")
    lines = getattr(mod, "LINES", None)
    if not lines:
        return
    terminalreporter.section("acceptance criteria")
    for line in sorted(lines, key=_criterion_key):
        terminalreporter.write_line(line)
