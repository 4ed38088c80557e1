"""Shared test plumbing: the acceptance-gate summary table."""

GATE_RESULTS: list[tuple[str, str, str]] = []


def record_gate(name: str, passed: bool, detail: str = "") -> None:
    GATE_RESULTS.append((name, "PASS" if passed else "FAIL", detail))


def pytest_terminal_summary(terminalreporter):
    if not GATE_RESULTS:
        return
    terminalreporter.section("acceptance gates")
    for name, status, detail in GATE_RESULTS:
        suffix = f"  ({detail})" if detail else ""
        terminalreporter.write_line(f"{status:4s}  {name}{suffix}")
