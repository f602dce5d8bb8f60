import pytest

_VERDICTS = pytest.StashKey[dict]()


def pytest_configure(config):
    config.stash[_VERDICTS] = {}


@pytest.fixture
def verdict(request):
    """Record one pass/fail line for an acceptance criterion, then assert it.

    Lines are printed together in the terminal summary; ``extra`` lines
    (such as a comparison table) are printed indented underneath.
    """
    store = request.config.stash[_VERDICTS]

    def record(number, ok, detail, extra=()):
        line = f"criterion {number}: {'PASS' if ok else 'FAIL'}  {detail}"
        store[number] = [line, *(f"    {e}" for e in extra)]
        assert ok, line

    return record


def pytest_terminal_summary(terminalreporter, config):
    store = config.stash.get(_VERDICTS, {})
    if store:
        terminalreporter.section("acceptance criteria")
        for number in sorted(store):
            for line in store[number]:
                terminalreporter.write_line(line)
