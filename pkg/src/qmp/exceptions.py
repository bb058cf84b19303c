"""Exception hierarchy shared by every qmp module."""


class QMPError(Exception):
    """Base class for all qmp errors."""


class CapacityError(QMPError, ValueError):
    """A register or lattice would exceed the configured memory guard."""


class ShapeError(QMPError, ValueError):
    pass


class NormalizationError(QMPError, ValueError):
    pass


class NoSolutionsError(QMPError, ValueError):
    """Raised when an iteration count is requested for an empty solution set."""


class DomainError(QMPError, ValueError):
    pass


class EmptyFreeSpaceError(QMPError):
    pass


class DegenerateConcentrationError(QMPError, ValueError):
    pass


class NumericError(QMPError, ArithmeticError):
    pass


class SamplingError(QMPError):
    pass


class ConfigError(QMPError, ValueError):
    pass


class NoPathFoundError(QMPError):
    """q-FPS exhausted its retry budget.

    The report of the failed run is attached as ``report``.
    """

    def __init__(self, message, report=None):
        super().__init__(message)
        self.report = report


class PartialTreeError(QMPError):
    """A tree planner ran out of budget before reaching the requested size.

    ``tree`` and ``report`` hold everything built so far.
    """

    def __init__(self, message, tree=None, report=None):
        super().__init__(message)
        self.tree = tree
        self.report = report


class FitFailure(QMPError):
    """Least-squares iteration cap reached; ``best`` holds the best coefficients seen."""

    def __init__(self, message, best=None, r2=None):
        super().__init__(message)
        self.best = best
        self.r2 = r2
