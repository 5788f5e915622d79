"""Exception types shared across the package."""


class MemsurfError(Exception):
    """Base class for all package errors."""


class OffSurfaceError(MemsurfError):
    """A point expected to lie on the target surface does not."""


class AmbiguousProjectionError(MemsurfError):
    """Closest-point projection queried at or near the medial axis."""


class NoConvergenceError(MemsurfError):
    """An iterative geometric solve (projection, chart height) failed."""


class RankDeficientError(MemsurfError):
    """Deformation gradient is (numerically) rank deficient."""


class NonpositiveJError(MemsurfError):
    """Area ratio argument must be strictly positive."""


class InvalidModelError(MemsurfError):
    """Constitutive parameters violate the model's admissibility rules."""


class InvalidEpsilonError(MemsurfError):
    """Rank-one construction parameter outside (0, 1)."""


class DeltaTooLargeError(MemsurfError):
    """Perturbation radius too large for the stress-bound constant."""


class DegenerateElementError(MemsurfError):
    """A mesh element is degenerate in the reference configuration."""


class NegativeJError(MemsurfError):
    """One or more elements violate the orientation constraint.

    Carries the offending element indices in ``elements``.
    """

    def __init__(self, message, elements=None):
        super().__init__(message)
        self.elements = list(elements) if elements is not None else []


class InfeasibleStartError(MemsurfError):
    """Initial configuration has elements at or below the area-ratio floor."""

    def __init__(self, message, elements=None):
        super().__init__(message)
        self.elements = list(elements) if elements is not None else []


class LineSearchStallError(MemsurfError):
    """Backtracking step length underflowed."""


class BoundaryTooCloseError(MemsurfError):
    """Degree target point too close to the image of the domain boundary."""


class IrregularValueError(MemsurfError):
    """Degree target point lies on an image edge."""


class ChartSpanFailureError(MemsurfError):
    """A geometric query could not be covered by a single chart."""


class ConfigError(MemsurfError):
    """Run configuration failed to parse or validate."""
