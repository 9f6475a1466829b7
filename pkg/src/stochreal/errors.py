"""Exception hierarchy.

Every failure raised by the package derives from :class:`StochRealError`, so
callers (the CLI in particular) can map them to structured diagnostics.
"""


class StochRealError(Exception):
    """Base class for all package errors."""

    code = "error"


class NotStable(StochRealError):
    code = "not_stable"


class NotPSD(StochRealError):
    code = "not_psd"


class NotStationary(StochRealError):
    code = "not_stationary"


class FamilyViolation(StochRealError):
    code = "family_violation"


class EmptyInput(StochRealError):
    code = "empty_input"


class InsufficientLags(StochRealError):
    code = "insufficient_lags"


class OrderTooLargeForWindow(StochRealError):
    code = "order_too_large_for_window"


class ReconstructionFailure(StochRealError):
    code = "reconstruction_failure"


class SingularTransform(StochRealError):
    code = "singular_transform"


class DifferentOrders(StochRealError):
    code = "different_orders"


class NotIsomorphic(StochRealError):
    code = "not_isomorphic"


class Infeasible(StochRealError):
    code = "infeasible"


class NotPositiveReal(StochRealError):
    code = "not_positive_real"


class NoConvergence(StochRealError):
    code = "no_convergence"


class NotScalar(StochRealError):
    code = "not_scalar"


class DegenerateR(StochRealError):
    code = "degenerate_r"


class DegenerateInnovation(StochRealError):
    code = "degenerate_innovation"
