"""Suite-wide wiring: the acceptance summary printed after the run."""

from __future__ import annotations

# (name, passed, detail) triples appended by tests/test_gnn_pipeline.py.
ACCEPTANCE_RESULTS: list[tuple[str, bool, str]] = []


def pytest_terminal_summary(terminalreporter, exitstatus, config):
    if not ACCEPTANCE_RESULTS:
        return
    terminalreporter.section("acceptance criteria")
    for name, passed, detail in ACCEPTANCE_RESULTS:
        status = "PASS" if passed else "FAIL"
        line = f"{status} - {name}"
        if detail:
            line += f" ({detail})"
        terminalreporter.write_line(line)
