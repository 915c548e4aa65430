"""Shared test plumbing: the acceptance suite records one line per
criterion and this hook replays them in the terminal summary, so the
verdicts stay visible even when stdout capture is on."""

ACCEPTANCE_LINES = []


def record(number: int, name: str, passed: bool, detail: str = "") -> None:
    status = "PASS" if passed else "FAIL"
    tail = f"  ({detail})" if detail else ""
    ACCEPTANCE_LINES.append(f"[{number:2d}] {name}: {status}{tail}")


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in ACCEPTANCE_LINES:
            terminalreporter.write_line(line)
