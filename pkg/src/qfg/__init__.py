"""Complex-valued normal factor graphs for quantum probabilities."""

from .errors import (
    ArgumentError,
    DimensionError,
    DomainError,
    InternalConsistencyError,
    NormalityError,
    NullConditioningError,
    QFGError,
    ResourceError,
    SchemeMismatchError,
    StructureError,
)
from .graph import (
    FactorGraph,
    brute_force_exterior,
    clamp,
    elimination_order,
    exterior_function,
    partition_sum,
)
from .tensor import DEFAULT_TOL, Tolerance

__version__ = "0.1.0"
