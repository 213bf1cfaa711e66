from __future__ import annotations

from collections import defaultdict

import pytest

CRITERIA = {
    "C1": "Table 1 Black-Scholes rate sweep",
    "C2": "Table 2 Black-Scholes start-level sweep",
    "C3": "Table 3 Johnson SU rate sweep",
    "C4": "Tables 4-5 log-gamma sweeps",
    "C5": "model-free property suite",
    "C6": "determinism across worker counts",
}


class AcceptanceLog:
    """Collects sub-check outcomes so each criterion gets one verdict line."""

    def __init__(self):
        self.checks: dict[str, list[tuple[str, bool, str]]] = defaultdict(list)

    def record(self, criterion: str, name: str, ok: bool, detail: str = "") -> bool:
        self.checks[criterion].append((name, bool(ok), detail))
        return bool(ok)

    def lines(self) -> list[str]:
        out = []
        for key, title in CRITERIA.items():
            checks = self.checks.get(key)
            if not checks:
                out.append(f"{key} NOT RUN  {title}")
                continue
            failed = [c for c in checks if not c[1]]
            verdict = "FAIL" if failed else "PASS"
            out.append(f"{key} {verdict}  {title} ({len(checks) - len(failed)}/{len(checks)} checks)")
            for name, _, detail in failed:
                out.append(f"     - {name}: {detail}")
        return out


_LOG = AcceptanceLog()


@pytest.fixture(scope="session")
def acceptance() -> AcceptanceLog:
    return _LOG


def pytest_terminal_summary(terminalreporter):
    if not _LOG.checks:
        return
    terminalreporter.section("acceptance criteria")
    for line in _LOG.lines():
        terminalreporter.write_line(line)
