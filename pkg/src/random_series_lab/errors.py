"""Exception hierarchy for the random series lab."""


class LabError(Exception):
    """Base class for every error raised by the lab."""


class UnsupportedLawError(LabError):
    """A law has no closed form for the requested quantity."""


class EmptySampleError(LabError, ValueError):
    """An empirical estimator received no samples."""


class WeightMissingError(LabError):
    """A law sequence carries no weight schedule t_k."""


class RadiusOutOfRangeError(LabError, ValueError):
    """A radius lies outside the open unit interval."""


class ScheduleUnreachableError(LabError):
    """Partial sums cannot certify that an auxiliary series reaches its target."""


class UnboundedEnvelopeError(LabError):
    """A law has no finite sup-norm envelope."""


class MissingDensityBoundError(LabError):
    """A law lacks the density bound required by log-integral operations."""


class DegenerateBoundError(LabError, ValueError):
    """A bound degenerates, e.g. every summand is a point mass."""


class NonUnitNormError(LabError, ValueError):
    """A weight vector does not have unit Euclidean norm."""


class PreconditionError(LabError, ValueError):
    """Inputs violate the stated precondition of an operation."""


class ZeroVarianceError(PreconditionError):
    """A law with zero variance reached an operation dividing by its variance."""


class DegreeZeroError(LabError, ValueError):
    """A polynomial has degree zero after deflation."""


class RootOnCircleError(LabError):
    """A root sits on the integration circle."""

    def __init__(self, radius: float, root: complex) -> None:
        super().__init__(f"root {root:.6g} lies on the circle |z| = {radius:.12g}")
        self.radius = radius
        self.root = root


class InsufficientRootsError(LabError):
    """Fewer roots than required lie outside the inner radius."""


class ConfigError(LabError):
    """An experiment configuration failed to parse or validate."""
