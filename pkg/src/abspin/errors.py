"""Exception hierarchy.

Every error raised by the library derives from :class:`AbspinError` and
carries a short machine-readable ``code``.
"""


class AbspinError(Exception):
    code = "error"


class ValidationError(AbspinError, ValueError):
    """Malformed input: bad parameter, wrong shape, broken invariant."""

    code = "validation"


class InvalidObservable(ValidationError):
    code = "invalid-observable"


class NotUnitary(ValidationError):
    code = "not-unitary"


class SingularityError(AbspinError, ArithmeticError):
    """A quantity was evaluated on (or too close to) the flux point."""

    code = "singularity"


class ReductionInvalid(ValidationError):
    code = "reduction-invalid"


class ConsistencyError(AbspinError, ArithmeticError):
    """An internal cross-check between two routes failed."""

    code = "consistency"
