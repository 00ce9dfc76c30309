from __future__ import annotations

import pytest
from hypothesis import settings

# first calls compile numba kernels, so per-example deadlines are meaningless
settings.register_profile("default", deadline=None)
settings.load_profile("default")

# criterion number -> (passed, detail); filled by test_acceptance.py
ACCEPTANCE: dict[int, tuple[bool, str]] = {}


@pytest.fixture
def verdict():
    """Record a PASS/FAIL line for one acceptance criterion, then assert it."""

    def record(num: int, ok: bool, detail: str) -> None:
        ACCEPTANCE[num] = (bool(ok), detail)
        print(f"CRITERION {num}: {'PASS' if ok else 'FAIL'}  {detail}")
        assert ok, detail

    return record


def pytest_terminal_summary(terminalreporter):
    if not ACCEPTANCE:
        return
    terminalreporter.section("acceptance criteria")
    for num in sorted(ACCEPTANCE):
        ok, detail = ACCEPTANCE[num]
        terminalreporter.write_line(f"CRITERION {num}: {'PASS' if ok else 'FAIL'}  {detail}")
