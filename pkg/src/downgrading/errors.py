"""Exception hierarchy.

Three families, mirroring the CLI exit codes: input/validation problems,
regime problems (parameters outside the region where a result exists) and
numerical failures.
"""


class DowngradingError(Exception):
    exit_code = 1


class ValidationError(DowngradingError):
    exit_code = 2


class StructuralInvalid(ValidationError):
    """A structural invariant of the model parameters is violated."""

    def __init__(self, invariant: str, message: str = ""):
        self.invariant = invariant
        super().__init__(f"{invariant}: {message}" if message else invariant)


class ConfigError(ValidationError):
    pass


class OutOfStateSpace(ValidationError):
    pass


class EmptyWindow(ValidationError):
    pass


class TraceDisabled(ValidationError):
    pass


class RegimeError(DowngradingError):
    exit_code = 3


class NotErgodic(RegimeError):
    pass


class NotFixedPoint(RegimeError):
    pass


class DegenerateModel(RegimeError):
    pass


class RegionUnsupported(RegimeError):
    pass


class Infeasible(RegimeError):
    pass


class NumericalError(DowngradingError):
    exit_code = 4


class RootCountMismatch(NumericalError):
    pass


class RepeatedRootDetected(NumericalError):
    pass


class PoleProximity(NumericalError):
    pass


class SingularB(NumericalError):
    pass


class StepTooLarge(NumericalError):
    pass
