import datetime as dt

import pytest

from finlex.corpus import TokenizedDoc


def make_doc(tokens, doc_id="d0", firm_id="f0", date=dt.date(2000, 3, 1)):
    return TokenizedDoc(doc_id, firm_id, date, tuple(tokens))


@pytest.fixture
def doc_factory():
    return make_doc


# one line per acceptance criterion, printed after the run
ACCEPTANCE_LINES: dict[int, str] = {}


def record_criterion(number: int, ok: bool, detail: str) -> None:
    ACCEPTANCE_LINES[number] = f"criterion {number:>2}: {'PASS' if ok else 'FAIL'}  {detail}"
    print(ACCEPTANCE_LINES[number])


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for n in sorted(ACCEPTANCE_LINES):
            terminalreporter.write_line(ACCEPTANCE_LINES[n])
