"""Shared fixtures and helpers."""

from hypothesis import settings

from invlift.series import parse_series

settings.register_profile("invlift", deadline=None, max_examples=60)
settings.load_profile("invlift")


def S(text, nvars=None, trunc=float("inf")):
    """Parse a series literal (shorthand used throughout the tests)."""
    return parse_series(text, nvars=nvars, trunc=trunc)


ACCEPTANCE_LINES = {}


def record_acceptance(number, ok, detail):
    """Store one acceptance verdict; printed at the end of the run."""
    ACCEPTANCE_LINES[number] = f"{'PASS' if ok else 'FAIL'} criterion {number}: {detail}"


def pytest_terminal_summary(terminalreporter):
    if not ACCEPTANCE_LINES:
        return
    terminalreporter.section("acceptance")
    for number in sorted(ACCEPTANCE_LINES):
        terminalreporter.write_line(ACCEPTANCE_LINES[number])
