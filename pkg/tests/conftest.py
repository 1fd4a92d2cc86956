"""Collects the acceptance-gate verdict lines and replays them after the
run summary, so every gate shows one [PASS]/[FAIL] line regardless of
output capturing."""

_gate_lines = []


def record_gate(line):
    _gate_lines.append(line)


def pytest_terminal_summary(terminalreporter):
    if _gate_lines:
        terminalreporter.section("acceptance gates")
        for line in _gate_lines:
            terminalreporter.line(line)
