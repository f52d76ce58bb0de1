"""Exception hierarchy shared by all qfg modules."""


class QFGError(Exception):
    """Base class for every error raised by qfg."""


class DimensionError(QFGError, ValueError):
    """Axis sizes or ranks are incompatible with the requested operation."""


class ArgumentError(QFGError, ValueError):
    """An argument is malformed (repeated axis, bad index, bad option)."""


class DomainError(QFGError, ValueError):
    """Input lies outside the mathematical domain of the operation.

    Raised for instance when a matrix that must be Hermitian or unitary
    is not, within the active tolerance.
    """


class NormalityError(QFGError, ValueError):
    """A variable would be attached to more than two factor ports."""


class ResourceError(QFGError, MemoryError):
    """A contraction or enumeration would exceed its configured budget."""


class NullConditioningError(QFGError, ZeroDivisionError):
    """Conditioning on (or collapsing to) an event of probability zero."""


class InternalConsistencyError(QFGError, RuntimeError):
    """A computed result violates an invariant that must always hold.

    This signals a bug in a graph builder, never bad user input.
    """


class StructureError(QFGError, ValueError):
    """A graph lacks the structure an algorithm requires."""


class SchemeMismatchError(QFGError, ValueError):
    """Monte Carlo samples were drawn from a proposal the estimator cannot use."""


class FormatError(QFGError, ValueError):
    """An input file does not parse or does not match its schema."""
