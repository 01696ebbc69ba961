"""Exception types shared across the package."""


class DimensionError(ValueError):
    """Operands have incompatible shapes."""


class InvalidStateError(ValueError):
    """Input is not a valid state or operator (non-Hermitian, non-PSD, ...)."""


class DegenerateInputError(ValueError):
    """Input carries no usable information (all-zero operator, all-zero counts)."""


class NoValidProjectorError(ValueError):
    """A least-squares measurement operator has no positive eigenvalue."""


class RankDeficiencyError(ValueError):
    """A design matrix or operator stack is not of full rank."""


class DiscretizationError(ValueError):
    """The sampling grid is too coarse for the requested field."""


class GridMismatchError(ValueError):
    """Two fields or masks live on different grids."""
