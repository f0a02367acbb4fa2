import contextlib
import time

import pytest

# criterion label -> (status, detail); filled by the acceptance tests
ACCEPTANCE: dict = {}


@pytest.fixture
def criterion():
    @contextlib.contextmanager
    def record(label: str):
        info = {"detail": ""}
        start = time.perf_counter()
        try:
            yield info
        except BaseException:
            ACCEPTANCE[label] = ("FAIL", info["detail"], time.perf_counter() - start)
            raise
        ACCEPTANCE[label] = ("PASS", info["detail"], time.perf_counter() - start)

    return record


def _order(label: str):
    head, _, tail = label.partition(" ")
    return (int(head) if head.isdigit() else 99, tail)


def pytest_terminal_summary(terminalreporter):
    if not ACCEPTANCE:
        return
    terminalreporter.section("acceptance criteria")
    for label in sorted(ACCEPTANCE, key=_order):
        status, detail, secs = ACCEPTANCE[label]
        terminalreporter.write_line(f"criterion {label}: {status} ({secs:.2f}s) {detail}".rstrip())
