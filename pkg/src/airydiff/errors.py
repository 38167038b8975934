"""Exception types shared across the package."""


class AiryDiffError(Exception):
    """Base class for all library errors."""


class DomainValidityError(AiryDiffError):
    """A point, disk or path leaves the validity region of an analytic function."""


class QuadratureConvergenceError(AiryDiffError):
    """Adaptive quadrature ran out of panel budget.

    Carries the best value obtained so far and its error estimate.
    """

    def __init__(self, message, value=None, estimate=None):
        super().__init__(message)
        self.value = value
        self.estimate = estimate


class TurningPointError(AiryDiffError):
    """Turning-point search failed or the point found is not simple."""


class BranchError(AiryDiffError):
    """A branch cut was hit, or a branch reference direction is degenerate."""


class AccuracyError(AiryDiffError):
    """An internal consistency check (structural zero, division remainder,
    defining ODE) exceeded its tolerance."""


class PoleError(AiryDiffError):
    """Evaluation requested too close to a pole of a kernel."""

    def __init__(self, message, distance=None):
        super().__init__(message)
        self.distance = distance


class DeformationError(AiryDiffError):
    """An integration contour could not be kept away from kernel poles."""


class ContractionError(AiryDiffError):
    """A Neumann iteration failed to contract.

    ``ratio`` is the measured update growth factor.
    """

    def __init__(self, message, ratio=None):
        super().__init__(message)
        self.ratio = ratio


class ConfigError(AiryDiffError):
    """Invalid experiment configuration."""
