"""Lifting maps over invariants of finite reflection groups.

The package works with three invariant systems: complex permutations
(elementary symmetric functions), signed permutations acting on real space,
and real permutations of trace-zero vectors.  Given a map f into the space of
invariant values, it produces local lifts through power substitutions and
blow-ups, glues them into a weak lift on a box, and checks the result on
dyadic grids.
"""

__version__ = "0.1.0"

from .desingularizer import (  # noqa: E402
    ChartMap,
    ResolutionTree,
    apply_chart,
    check_descent,
    resolve_nc_1d,
    resolve_nc_2d,
    verify_certificates,
)
from .errors import (  # noqa: E402
    BudgetExceeded,
    DimensionMismatch,
    InputError,
    InvliftError,
    MembershipError,
    PrecisionExhausted,
    VerificationFailed,
)
from .invariants import (  # noqa: E402
    Family,
    InvariantSystem,
    Membership,
    SignedPermReal,
    SymmetricComplex,
    SymmetricRealTraceZero,
    membership_test,
    roots_from_invariants,
    sigma_eval,
)
from .lifter import LiftChart, LiftOptions, LiftProblem, lift, lift_curve, lift_multi  # noqa: E402
from .polyroots import isolate_roots  # noqa: E402
from .scalar import Scalar  # noqa: E402
from .series import TruncatedSeries, parse_series  # noqa: E402
from .weak import (  # noqa: E402
    VerificationReport,
    WeakLift,
    assemble_weak_lift,
    glue_blow_down,
    glue_power_substitution,
    patch_charts,
    section_map,
    verify,
)

__all__ = [
    "BudgetExceeded", "ChartMap", "DimensionMismatch", "Family", "InputError", "InvariantSystem",
    "InvliftError", "LiftChart", "LiftOptions", "LiftProblem", "Membership", "MembershipError",
    "PrecisionExhausted", "ResolutionTree", "Scalar", "SignedPermReal", "SymmetricComplex",
    "SymmetricRealTraceZero", "TruncatedSeries", "VerificationFailed", "VerificationReport",
    "WeakLift", "apply_chart", "assemble_weak_lift", "check_descent", "glue_blow_down",
    "glue_power_substitution", "isolate_roots", "lift", "lift_curve", "lift_multi",
    "membership_test", "parse_series", "patch_charts", "resolve_nc_1d", "resolve_nc_2d",
    "roots_from_invariants", "section_map", "sigma_eval", "verify", "verify_certificates",
]
