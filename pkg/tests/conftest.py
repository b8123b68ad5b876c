import pytest

_VERDICTS = []


@pytest.fixture
def verdict():
    """Record one ``C<n> PASS|FAIL`` line; the lines are printed after the run."""

    def record(name, ok, detail=""):
        line = f"{name} {'PASS' if ok else 'FAIL'}"
        if detail:
            line += f"  {detail}"
        _VERDICTS.append(line)
        return ok

    return record


def pytest_terminal_summary(terminalreporter):
    if not _VERDICTS:
        return
    terminalreporter.section("acceptance criteria")
    for line in sorted(_VERDICTS, key=lambda s: int(s.split()[0][1:])):
        terminalreporter.write_line(line)
