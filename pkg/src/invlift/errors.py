"""Error hierarchy.

Every error carries an ``exit_code`` so the CLI can map failures to
distinct process exit statuses without a lookup table.
"""


class InvliftError(Exception):
    """Base class; also used for computation errors without a dedicated code."""

    exit_code = 6


class InputError(InvliftError, ValueError):
    exit_code = 2


class DimensionMismatch(InputError):
    pass


class UnsupportedFamily(InputError):
    pass


class MembershipError(InputError):
    """Real-mode data whose value is not in the image of the orbit map."""


class PrecisionExhausted(InvliftError):
    exit_code = 3


class Indeterminate(PrecisionExhausted):
    """A ball computation cannot decide a sign or zero test."""


class BudgetExceeded(InvliftError):
    exit_code = 4


class VerificationFailed(InvliftError):
    exit_code = 5


class ZeroToTruncation(InvliftError):
    """Series vanishes up to its truncation order; the caller must raise N."""

    exit_code = 3


class NotNormalCrossings(InvliftError):
    pass


class NotDivisible(InvliftError):
    pass


class TruncationUnderflow(InvliftError):
    """Valid series order dropped below the floor; rerun with a larger truncation."""

    exit_code = 3


class CoverageGap(InvliftError):
    pass


class MissingChart(InvliftError):
    pass


class Unsupported(InvliftError):
    """Input outside the implemented scope (e.g. non-polynomial 2D resolution)."""
