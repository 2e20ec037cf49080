import pytest

CRITERIA: dict[int, list] = {}


@pytest.fixture
def record():
    def _record(criterion, results, elapsed=None):
        CRITERIA.setdefault(criterion, []).append((results, elapsed))

    return _record


def pytest_terminal_summary(terminalreporter):
    if not CRITERIA:
        return
    tr = terminalreporter
    tr.section("acceptance criteria")
    for k in sorted(CRITERIA):
        results = [r for batch, _ in CRITERIA[k] for r in batch]
        elapsed = sum(t for _, t in CRITERIA[k] if t is not None)
        ok = all(r.passed for r in results)
        tr.write_line(f"criterion {k}: {'PASS' if ok else 'FAIL'} ({len(results)} checks, {elapsed:.1f} s)")
        for r in results:
            tr.write_line(f"    {r.line()}")
