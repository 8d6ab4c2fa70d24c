import sys
from pathlib import Path

sys.path.insert(0, str(Path(__file__).parent))

CRITERIA: dict[int | str, tuple[bool, str]] = {}


def pytest_terminal_summary(terminalreporter):
    if not CRITERIA:
        return
    terminalreporter.section("acceptance criteria")
    for num in sorted(CRITERIA, key=lambda k: (isinstance(k, str), str(k).zfill(3))):
        ok, detail = CRITERIA[num]
        label = f"criterion {num:2d}" if isinstance(num, int) else f"{num} clause"
        terminalreporter.write_line(f"{label}: {'PASS' if ok else 'FAIL'}  {detail}")
