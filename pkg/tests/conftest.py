import collections
from pathlib import Path

import pytest

FIXTURES = Path(__file__).parent / "fixtures"

# Acceptance summary: one line per criterion, printed after the run.
_ACCEPTANCE_RESULTS = collections.defaultdict(list)


@pytest.fixture
def fixtures_dir() -> Path:
    return FIXTURES


def load_corpus(name):
    """Parse a fixture corpus TSV into (input, field1, field2) tuples."""
    rows = []
    with open(FIXTURES / name, encoding="utf-8") as fh:
        for line in fh:
            line = line.rstrip("\n")
            if not line.strip() or line.startswith("#"):
                continue
            parts = line.split("\t")
            assert len(parts) == 3, f"malformed corpus line: {line!r}"
            rows.append(tuple(parts))
    return rows


def pytest_runtest_logreport(report):
    if report.when != "call":
        return
    name = report.nodeid
    if "test_acceptance.py" in name and "criterion" in name:
        # e.g. ...::test_criterion_5_bootstrap[...]
        short = name.split("::")[-1]
        key = short.split("_")[2]  # criterion number token
        _ACCEPTANCE_RESULTS[key].append((short, report.outcome))


def pytest_terminal_summary(terminalreporter):
    if not _ACCEPTANCE_RESULTS:
        return
    terminalreporter.write_sep("-", "acceptance criteria")
    for key in sorted(_ACCEPTANCE_RESULTS, key=lambda k: (len(k), k)):
        outcomes = _ACCEPTANCE_RESULTS[key]
        ok = all(outcome == "passed" for _, outcome in outcomes)
        names = ", ".join(sorted({short for short, _ in outcomes}))
        status = "PASS" if ok else "FAIL"
        terminalreporter.write_line(f"criterion {key}: {status} ({names})")
