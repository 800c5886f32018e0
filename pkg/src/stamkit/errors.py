"""Exception hierarchy shared by all stamkit modules."""


class StamError(Exception):
    """Base class for every error raised by stamkit."""


class NonHermitianInput(StamError):
    pass


class NonFinite(StamError):
    pass


class DimensionMismatch(StamError):
    pass


class IndexOutOfRange(StamError):
    pass


class InvalidArgument(StamError, ValueError):
    pass


class MissingEnergy(StamError):
    pass


class NotBipartite(StamError):
    pass


class InconsistentPairs(StamError):
    pass


class IncommensurateEnergies(StamError):
    pass


class InvalidTruncation(StamError):
    pass


class InconsistentAngles(StamError):
    pass


class SingularPoint(StamError):
    pass


class OutOfPath(StamError):
    pass


class NonPhysicalState(StamError):
    pass


class ConvergenceNotReached(StamError):
    pass


class ChannelNotApplicable(StamError):
    pass


class ConfigError(StamError):
    """Malformed or inconsistent run configuration (CLI exit status 2)."""


class NumericalCheckFailed(StamError):
    """A declared run check failed (CLI exit status 3)."""
