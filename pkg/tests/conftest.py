import pytest

ACCEPTANCE: list[str] = []


@pytest.fixture
def criterion():
    """Call with (number, title, ok, detail); records one PASS/FAIL line and prints it."""

    def record(num, title, ok, detail=""):
        line = f"criterion {num:>2} {'PASS' if ok else 'FAIL'}  {title}" + (f"  [{detail}]" if detail else "")
        ACCEPTANCE.append(line)
        print(line)
        return ok

    return record


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE:
        terminalreporter.section("acceptance criteria")
        for line in sorted(ACCEPTANCE, key=lambda s: int(s.split()[1])):
            terminalreporter.write_line(line)
