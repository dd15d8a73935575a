from __future__ import annotations

import re

_CRITERIA: dict[str, tuple[str, str]] = {}
_PATTERN = re.compile(r"test_criterion_(\d+)_(\w+)")


def pytest_runtest_logreport(report):
    m = _PATTERN.search(report.nodeid)
    if not m:
        return
    key = m.group(1)
    if report.when == "call" or report.failed:
        prev = _CRITERIA.get(key, (None, "passed"))[1]
        outcome = "failed" if report.failed or prev == "failed" else report.outcome
        _CRITERIA[key] = (m.group(2).replace("_", " "), outcome)


def pytest_terminal_summary(terminalreporter):
    if not _CRITERIA:
        return
    terminalreporter.section("acceptance criteria")
    for key in sorted(_CRITERIA):
        name, outcome = _CRITERIA[key]
        status = {"passed": "PASS", "failed": "FAIL"}.get(outcome, outcome.upper())
        terminalreporter.write_line(f"criterion {key}: {status}  {name}")
