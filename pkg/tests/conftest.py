import pytest

_REPORT_KEY = pytest.StashKey[list]()


def pytest_configure(config):
    config.stash[_REPORT_KEY] = []


@pytest.fixture
def report(request):
    """Record one acceptance line and fail the test when ``ok`` is false."""
    lines = request.config.stash[_REPORT_KEY]

    def _report(number, title, ok, detail=""):
        line = f"criterion {number:>2} {'PASS' if ok else 'FAIL'}: {title}"
        if detail:
            line += f" ({detail})"
        lines.append((number, line))
        print(line)
        assert ok, line

    return _report


def pytest_terminal_summary(terminalreporter, config):
    lines = config.stash.get(_REPORT_KEY, [])
    if lines:
        terminalreporter.section("acceptance criteria")
        for _, line in sorted(lines):
            terminalreporter.write_line(line)
