"""Exceptions raised by flexpm."""


class FlexPMError(Exception):
    """Base class of all flexpm errors.

    Attributes:
        code (str): Short machine-readable error code (e.g. ``"MissingKey"``).
        message (str): Human-readable explanation.
        detail (str): Optional context such as a key name, a path or a failed predicate.
    """

    exit_code = 1

    def __init__(self, code, message, detail=""):
        self.code = code
        self.message = message
        self.detail = detail
        super().__init__(str(self))

    def __str__(self):
        text = f"[{self.code}] {self.message}"
        if self.detail:
            text += f" ({self.detail})"
        return text


class ConfigError(FlexPMError):
    """A configuration document is missing a required key or has an unusable value."""


class ValidationError(FlexPMError):
    """A value violates a documented invariant."""


class ReportError(FlexPMError):
    """A result file could not be written or read."""


class NumericalError(FlexPMError):
    """A numerical procedure failed."""

    exit_code = 2


class DomainError(NumericalError):
    """An argument lies outside the domain of a function."""


class SingularityError(NumericalError):
    """The mechanism is at, or numerically too close to, a singular configuration."""


class UnreachablePoseError(NumericalError):
    """A platform pose cannot be reached by one of the branches."""


class ConvergenceError(NumericalError):
    """An iterative solver did not converge."""


class IntegrityError(NumericalError):
    """A structural property of the model (definiteness, energy balance) was violated."""


class RankError(NumericalError):
    """Snapshot data does not have the requested numerical rank."""


class PartialDataError(NumericalError):
    """A data-collection run stopped before completion.

    Attributes:
        count (int): Number of samples collected before the failure.
    """

    def __init__(self, code, message, detail="", count=0):
        self.count = count
        super().__init__(code, message, detail)


class NoFitError(NumericalError):
    """No sparse regression in the regularization sweep explains the data."""


class AmbiguityError(NumericalError):
    """Two candidate mode shapes are too close to call."""


class TrainingError(NumericalError):
    """Network training diverged.

    Attributes:
        checkpoint: The last network state with a finite loss, or None.
    """

    def __init__(self, code, message, detail="", checkpoint=None):
        self.checkpoint = checkpoint
        super().__init__(code, message, detail)


class AcceptanceError(FlexPMError):
    """A reproduction run did not meet its acceptance criterion."""

    exit_code = 3
