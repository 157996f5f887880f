import contextlib
import time

import pytest

_RESULTS = pytest.StashKey[dict]()


class _Record:
    def __init__(self):
        self.detail = ""


@pytest.fixture
def criterion(request):
    """Context manager that logs one acceptance line, pass or fail."""
    store = request.config.stash.setdefault(_RESULTS, {})

    @contextlib.contextmanager
    def run(number, title, budget_s):
        rec = _Record()
        start = time.perf_counter()
        try:
            yield rec
            elapsed = time.perf_counter() - start
            if elapsed >= budget_s:
                rec.detail += f" [too slow: {elapsed:.2f}s >= {budget_s}s]"
                raise AssertionError(f"criterion {number} exceeded its {budget_s}s budget ({elapsed:.2f}s)")
        except BaseException as exc:
            elapsed = time.perf_counter() - start
            store[number] = ("FAIL", title, f"{rec.detail} {type(exc).__name__}: {exc}".strip(), elapsed)
            raise
        store[number] = ("PASS", title, rec.detail.strip(), elapsed)

    return run


def pytest_terminal_summary(terminalreporter, config):
    store = config.stash.get(_RESULTS, {})
    if not store:
        return
    terminalreporter.section("acceptance criteria")
    for number in sorted(store):
        status, title, detail, elapsed = store[number]
        line = f"criterion {number:2d} {status}  {title} ({elapsed:.2f}s)"
        if detail:
            line += f"  {detail.splitlines()[0]}"
        terminalreporter.write_line(line)
