import pytest

from relind import _backend

BACKENDS = _backend.available()

# criterion number -> (passed, detail lines); filled by test_acceptance
ACCEPTANCE = {}


@pytest.fixture(params=BACKENDS)
def backend(request):
    return request.param


def pytest_terminal_summary(terminalreporter):
    if not ACCEPTANCE:
        return
    tr = terminalreporter
    tr.section("acceptance criteria")
    for num in sorted(ACCEPTANCE):
        ok, title, details = ACCEPTANCE[num]
        tr.write_line(f"criterion {num:2d} {'PASS' if ok else 'FAIL'}  {title}")
        for line in details:
            tr.write_line(f"              {line}")
