"""Exception types shared across the package."""

from __future__ import annotations


class HJEntropyError(Exception):
    """Base class for every error raised on purpose by this package."""


class ConfigurationError(HJEntropyError, ValueError):
    """Invalid parameters, malformed config files or inconsistent grids."""


class DomainError(HJEntropyError, ValueError):
    """A point or a box lies outside the region where an object is defined."""


class SearchBoxError(HJEntropyError):
    """A Legendre argmax landed on the edge of the momentum search box.

    The conjugate at that slope cannot be trusted; enlarge the box.
    """

    def __init__(self, message: str, node_index: tuple, slope):
        super().__init__(message)
        self.node_index = node_index
        self.slope = slope


class SearchRadiusError(HJEntropyError):
    """A Hopf-Lax minimizer hit the outer shell of the displacement stencil."""

    def __init__(self, message: str, node_index: tuple, point):
        super().__init__(message)
        self.node_index = node_index
        self.point = point


class ClassMembershipError(HJEntropyError):
    """A sampled function fails a membership precondition (support, slope, ...)."""

    def __init__(self, message: str, offending=None):
        super().__init__(message)
        self.offending = offending


class NotSemiconcaveError(ClassMembershipError):
    """Second differences exceed the semiconcavity budget."""


class MonotonicityError(HJEntropyError):
    """Cell averages of a field break the required axis ordering."""

    def __init__(self, message: str, cell_a: tuple, cell_b: tuple, component: int):
        super().__init__(message)
        self.cell_a = cell_a
        self.cell_b = cell_b
        self.component = component


class ValidityError(HJEntropyError):
    """A requested resolution or accuracy is outside the range where a bound holds."""


class ReachabilityConditionError(HJEntropyError):
    """The target profile violates the compatibility conditions for exact reachability."""

    def __init__(self, message: str, failed: dict):
        super().__init__(message)
        self.failed = failed
