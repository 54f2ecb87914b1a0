import os

import pytest

SLOW = os.environ.get("MODLAT_SLOW") == "1"

_ACCEPTANCE_LINES = []


class Recorder:
    """Collects one PASS/FAIL line per acceptance criterion."""

    def __init__(self, number, title):
        self.number = number
        self.title = title
        self.checks = []

    def check(self, name, ok, detail=""):
        self.checks.append((name, bool(ok), detail))
        return bool(ok)

    @property
    def ok(self):
        return all(ok for _, ok, _ in self.checks)

    def finish(self, elapsed=None, limit=None, note=""):
        if limit is not None:
            self.check(f"runtime < {limit:g} s", elapsed < limit, f"{elapsed:.2f} s")
        failed = [f"{n} ({d})" if d else n for n, ok, d in self.checks if not ok]
        status = "PASS" if self.ok else "FAIL"
        timing = f" [{elapsed:.2f} s]" if elapsed is not None else ""
        line = f"{status} criterion {self.number}: {self.title}{timing}"
        if note:
            line += f" ({note})"
        if failed:
            line += " -- failed: " + "; ".join(failed)
        _ACCEPTANCE_LINES.append(line)
        print(line)
        assert self.ok, line


@pytest.fixture
def criterion():
    return Recorder


def pytest_terminal_summary(terminalreporter):
    if _ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in sorted(_ACCEPTANCE_LINES, key=lambda s: int(s.split()[2].rstrip(":"))):
            terminalreporter.write_line(line)


def pytest_collection_modifyitems(config, items):
    if SLOW:
        return
    skip = pytest.mark.skip(reason="long-running; set MODLAT_SLOW=1")
    for item in items:
        if "slow" in item.keywords:
            item.add_marker(skip)
