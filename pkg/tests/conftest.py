"""Shared test plumbing: the acceptance suite records one line per
criterion and this hook prints them after the run, capture or not."""

ACCEPTANCE_LINES: list[str] = []


def record_criterion(number: int, description: str, ok: bool, detail: str = "") -> None:
    status = "PASS" if ok else "FAIL"
    suffix = f" [{detail}]" if detail else ""
    ACCEPTANCE_LINES.append(f"[ACCEPTANCE {number:>2}] {status} - {description}{suffix}")


def pytest_terminal_summary(terminalreporter, exitstatus, config):
    if not ACCEPTANCE_LINES:
        return
    terminalreporter.section("acceptance criteria")
    for line in sorted(ACCEPTANCE_LINES):
        terminalreporter.write_line(line)
