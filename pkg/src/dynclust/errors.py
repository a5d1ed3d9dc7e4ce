"""Exception types shared across the package."""


class DynclustError(Exception):
    """Base class for all package errors."""


class EmptySnapshot(DynclustError):
    """Operation requires a snapshot with at least one edge (or node)."""


class SaturatedGraph(DynclustError):
    """Not enough absent node pairs to host the requested noise edges."""


class InfeasibleParams(DynclustError):
    """Generator degree or community targets cannot be met."""


class EmptyCluster(DynclustError):
    """A cluster lost all members and re-seeding failed repeatedly."""


class NonFiniteLoss(DynclustError):
    """Factorization input or iterate contains non-finite values."""


class TooManySubsets(DynclustError):
    """More subsets requested than available non-landmark nodes."""


class ShapeMismatch(DynclustError):
    """Operands do not conform."""


class LengthMismatch(DynclustError):
    """Partitions being compared cover different node counts."""


class MissingPrevFactors(DynclustError):
    """Selective update requested without factors from the previous timestamp."""


class ConvergenceFailure(DynclustError):
    """Iterative eigensolver failed and no dense fallback was possible."""
