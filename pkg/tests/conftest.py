import pytest

from acsforms.acceptance import CRITERIA

_RESULTS = {}


@pytest.fixture(scope="session")
def criterion():
    """Run an acceptance criterion once per session and remember the outcome."""
    def get(n):
        if n not in _RESULTS:
            _RESULTS[n] = CRITERIA[n]()
        return _RESULTS[n]
    return get


def pytest_terminal_summary(terminalreporter):
    if not _RESULTS:
        return
    terminalreporter.section("acceptance criteria")
    for n in sorted(_RESULTS):
        terminalreporter.write_line(_RESULTS[n].line())
