"""Exception hierarchy shared across the package."""


class CmapLabError(Exception):
    """Base class for all errors raised by cmaplab."""


class DomainError(CmapLabError, ValueError):
    """A point lies outside the domain of holomorphy of the prepotential."""


class SignatureError(CmapLabError):
    """The metric at a point does not have the conical (2n, 2) signature."""


class DegenerateError(CmapLabError):
    """The affine-coordinate Jacobian is singular or badly conditioned."""


class SingularMetricError(CmapLabError):
    """A metric supplied to the finite-difference oracle is not invertible."""


class DimensionMismatch(CmapLabError, ValueError):
    pass


class OneLoopDomainError(CmapLabError):
    """The shifted Hamiltonian f_Z - c/2 is not positive at the point."""


class FrameDegeneracyError(CmapLabError):
    pass


class NoAdmissibleSampleError(CmapLabError):
    pass


class ConfigError(CmapLabError):
    """Invalid run configuration; ``field`` names the offending entry."""

    def __init__(self, message, field=None):
        self.field = field
        if field is not None:
            message = f"{field}: {message}"
        super().__init__(message)
