"""Exception hierarchy shared by all reflexia modules."""


class ReflexiaError(ValueError):
    """Base class for every error raised by this package."""


class DimensionMismatch(ReflexiaError):
    pass


class OutOfChartDomain(ReflexiaError):
    """A point or group element lies outside the working chart."""


class NotAdInvariant(ReflexiaError):
    """Conjugation by a group element leaves the span of the matrix basis."""


class NotInvolutive(ReflexiaError):
    pass


class NotAutomorphism(ReflexiaError):
    pass


class DomainTooSmall(ReflexiaError):
    """The finite-difference stencil does not fit inside the black-box domain."""


class InvolutionViolated(ReflexiaError):
    pass


class EigenvalueAmbiguous(ReflexiaError):
    pass


class RankUnstable(ReflexiaError):
    """A numerical rank changes when the cutoff is moved by a factor of ten."""


class AxiomViolation(ReflexiaError):
    """A black box failed the A1/A2 sanity gate."""


class LeftDomain(ReflexiaError):
    def __init__(self, message, trajectory=None):
        super().__init__(message)
        self.trajectory = trajectory


class ParityViolated(ReflexiaError):
    pass


class SkipRateExceeded(ReflexiaError):
    pass


class InputError(ReflexiaError):
    """Malformed, missing or inconsistent input file."""
