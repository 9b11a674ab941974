"""Exception hierarchy shared by the itodiff modules."""


class ItodiffError(Exception):
    """Base class for all library errors."""


class InvalidArgumentError(ItodiffError, ValueError):
    """An argument is outside its documented domain."""


class ShapeMismatchError(ItodiffError, ValueError):
    """Array shapes, grids or scenario counts do not agree."""


class GridCoverageError(ItodiffError, ValueError):
    """A requested window or lookup falls outside the simulated grid."""


class UnsupportedProcessError(ItodiffError):
    """The process kind has no coefficient representation for this operation."""


class DecompositionError(ItodiffError):
    """No finite-variation / martingale split is available."""


class ManifoldIntegrityError(ItodiffError):
    """A curve family produced a point off its manifold."""


class SingularVolatilityError(ItodiffError, ValueError):
    """The volatility matrix is not invertible at an evaluation point."""


class ZeroMarketPriceOfRiskError(ItodiffError, ValueError):
    """The market price of risk vanishes, so the market portfolio is undefined."""


class UndefinedWeightsError(ItodiffError, ValueError):
    """Fund weights require a non-zero risk-free rate."""
