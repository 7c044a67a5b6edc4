import pytest

# (criterion, status, detail) lines filled in by test_acceptance
ACCEPTANCE = []


@pytest.fixture
def acceptance_report():
    def record(criterion, ok, detail, status=None):
        ACCEPTANCE.append((criterion, status or ("PASS" if ok else "FAIL"), detail))
        return ok

    return record


def pytest_terminal_summary(terminalreporter):
    if not ACCEPTANCE:
        return
    terminalreporter.section("acceptance criteria")
    for criterion, status, detail in sorted(ACCEPTANCE, key=lambda r: r[0]):
        terminalreporter.write_line(f"[{status}] {criterion}: {detail}")
