import pytest

from coslat.lattice import GeneratingVector, default_generating_vector


@pytest.fixture(scope="session")
def g() -> GeneratingVector:
    return default_generating_vector()


_ACCEPTANCE_LINES = []


@pytest.fixture
def acceptance_report(request):
    """Record and print the single pass/fail line of an acceptance criterion."""
    capman = request.config.pluginmanager.getplugin("capturemanager")

    def report(number: int, ok: bool, detail: str) -> None:
        line = f"[{'PASS' if ok else 'FAIL'}] criterion {number}: {detail}"
        _ACCEPTANCE_LINES.append(line)
        with capman.global_and_fixture_disabled():
            print("\n" + line)

    return report


def pytest_terminal_summary(terminalreporter):
    if _ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in _ACCEPTANCE_LINES:
            terminalreporter.write_line(line)
