"""Exception hierarchy.

`SolitonError` covers everything the numerical layer can refuse or fail on; the CLI maps it
to exit code 3 and prints the class name. `ConfigError` covers scenario and flag problems
(exit code 2).
"""


class ConfigError(Exception):
    """Scenario file or command-line flags are invalid."""


class SolitonError(Exception):
    """Base class of solver and algebra errors."""


# mollifiers
class NonIntegrable(SolitonError):
    pass


class QuadratureFailure(SolitonError):
    pass


# weakalgebra
class CenterMismatch(SolitonError):
    pass


class OrientationMismatch(CenterMismatch):
    pass


class MissingMoment(SolitonError):
    pass


class OutOfTruncation(SolitonError):
    """A product or derivative leaves the {1, delta, delta', theta} truncation."""


class UnreducedInput(SolitonError):
    pass


class MissingRate(SolitonError):
    """A time derivative was requested but a coefficient carries no rate."""


# profiles
class NonPositiveAmplitude(SolitonError):
    pass


class NoSoliton(SolitonError):
    pass


class DegenerateRoot(SolitonError):
    pass


class TailDivergence(SolitonError):
    pass


# hopf
class BeyondBreakingTime(SolitonError):
    pass


class NewtonStall(SolitonError):
    pass


# dynamics
class AmplitudeCollapse(SolitonError):
    pass


class SingularJacobian(SolitonError):
    pass


class ConstraintNewtonFail(SolitonError):
    pass


class CornerIncompatible(SolitonError):
    pass


class QueryOutsideRegion(SolitonError):
    pass


# verify
class TimeOutOfRange(SolitonError):
    pass


class ResolutionInsufficient(SolitonError):
    pass


class BlowupDetected(SolitonError):
    pass
