import sys
from pathlib import Path

import pytest

sys.path.insert(0, str(Path(__file__).parent))

# criterion id -> list of (test name, passed)
_ACCEPTANCE: dict[int, list[tuple[str, bool]]] = {}

CRITERIA = {
    1: "VSS round-trip, 1000 secrets at (t=6, n=30)",
    2: "share-check tamper rejection, 1000 tamperings",
    3: "homomorphic aggregation, 10 clients x 100 parameters, exact",
    4: "decryption-proof completeness and soundness",
    5: "range-proof boundaries and forgery rejection",
    6: "filter selectivity, 30 clients with 3 sign-flippers, 10 seeds",
    7: "norm gate rejects oversized updates",
    8: "Byzantine identification triad, each under 60 s",
    9: "end-to-end aggregate within 2^-f of the real average",
    10: "time and bytes scale within [1.8, 2.2] per doubling",
}


def pytest_configure(config):
    config.addinivalue_line("markers", "acceptance(n): test backs acceptance criterion n")


@pytest.hookimpl(hookwrapper=True)
def pytest_runtest_makereport(item, call):
    outcome = yield
    report = outcome.get_result()
    marker = item.get_closest_marker("acceptance")
    if marker is None:
        return
    if report.when == "call" or (report.when == "setup" and not report.passed):
        _ACCEPTANCE.setdefault(marker.args[0], []).append((item.name, report.passed))


def pytest_terminal_summary(terminalreporter):
    if not _ACCEPTANCE:
        return
    terminalreporter.section("acceptance criteria")
    for n in sorted(CRITERIA):
        results = _ACCEPTANCE.get(n)
        if results is None:
            status = "NOT RUN"
        else:
            status = "PASS" if all(ok for _, ok in results) else "FAIL"
        terminalreporter.write_line(f"[{status}] criterion {n:>2}: {CRITERIA[n]}")
