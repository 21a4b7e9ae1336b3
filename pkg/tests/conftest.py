import pytest

from netflow.minimal import standard_triod


@pytest.fixture
def triod():
    return standard_triod(32)


def pytest_terminal_summary(terminalreporter):
    from _support import ACCEPTANCE_RESULTS

    if not ACCEPTANCE_RESULTS:
        return
    terminalreporter.write_sep("=", "acceptance criteria")
    for number in sorted(ACCEPTANCE_RESULTS):
        ok, text = ACCEPTANCE_RESULTS[number]
        terminalreporter.write_line(f"{'PASS' if ok else 'FAIL'} criterion {number}: {text}")
