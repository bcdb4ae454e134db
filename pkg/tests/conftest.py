import pytest

# (criterion id, passed, detail), filled by test_acceptance
ACCEPTANCE_RESULTS: list[tuple[str, bool, str]] = []


@pytest.fixture
def acceptance_record():
    def record(cid: str, passed: bool, detail: str) -> None:
        ACCEPTANCE_RESULTS.append((cid, passed, detail))
        print(f"{cid} {'PASS' if passed else 'FAIL'}: {detail}")
        assert passed, f"{cid}: {detail}"
    return record


def pytest_terminal_summary(terminalreporter):
    if not ACCEPTANCE_RESULTS:
        return
    terminalreporter.section("acceptance criteria")
    for cid, passed, detail in sorted(ACCEPTANCE_RESULTS):
        terminalreporter.write_line(f"{cid} {'PASS' if passed else 'FAIL'}: {detail}")
