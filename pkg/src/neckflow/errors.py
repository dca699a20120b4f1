"""Exception types shared across the package."""


class NeckflowError(Exception):
    """Base class for all package-specific errors."""


class SingularCurvature(NeckflowError):
    """Curvature requested at a profile that is already pinched at an interior node."""

    def __init__(self, nodes, message=None):
        self.nodes = list(nodes)
        super().__init__(message or f"fiber radius below pinch threshold at nodes {self.nodes}")


class StepRejected(NeckflowError):
    """A time step could not be accepted; the caller should retry with a smaller dt."""


class UnsupportedTopology(NeckflowError):
    """Surgery requested on a singular set it cannot handle (touches a pole, or multiple components)."""


class UndefinedAtPole(NeckflowError):
    """Density reconstruction found mass sitting at a point where the fiber radius vanishes."""


class BadCollar(NeckflowError):
    """Concentration collar preconditions (monotonicity / slope window) failed on the host profile."""


class FormulaMismatch(NeckflowError):
    """Two formulas that must agree analytically disagreed beyond tolerance."""


class NotUniform(NeckflowError):
    """A warped-product measure with fiber-dependent density was passed where a spatially uniform one is required."""


class TooLarge(NeckflowError):
    """Instance exceeds the exhaustive-enumeration bound of the brute-force oracle."""


class OverlappingSupports(NeckflowError):
    """Cross-component transport requires the two diffusions to live on different caps."""


class InconclusiveResolution(NeckflowError):
    """The grid could not support the largest requested certificate level."""

    def __init__(self, requested, achieved, message=None):
        self.requested = requested
        self.achieved = achieved
        super().__init__(
            message
            or f"could not certify level {requested}; achieved {achieved} at this resolution"
        )


class ConfigError(NeckflowError):
    """Malformed scenario configuration."""


class NumericalFailure(NeckflowError):
    """Unrecoverable numerical breakdown (e.g. a step-rejection cascade)."""
