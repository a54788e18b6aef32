import numpy as np
import pytest

# (criterion, verdict, detail) lines collected by the acceptance suite
ACCEPTANCE_LINES = []


@pytest.fixture
def rng():
    return np.random.default_rng(20240601)


@pytest.fixture
def record():
    def _record(criterion, ok, detail):
        line = f"criterion {criterion:<3} {'PASS' if ok else 'FAIL'}  {detail}"
        ACCEPTANCE_LINES.append(line)
        print(line)
        return ok

    return _record


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in sorted(ACCEPTANCE_LINES, key=lambda l: (int(l.split()[1].rstrip("ab")), l)):
            terminalreporter.write_line(line)
