"""Exception types shared across the toolkit."""


class SecsimError(Exception):
    """Base class for all toolkit errors."""


class InvalidConfig(SecsimError):
    """A model configuration violates its documented constraints."""


class ZeroLikelihood(SecsimError):
    """An observation has zero probability under the predicted belief."""


class NonConvergence(SecsimError):
    """An iterative solver exhausted its iteration budget."""


class DimensionCap(SecsimError):
    """A requested model exceeds the configured size cap."""


class FileFormat(SecsimError):
    """A file does not parse under the expected schema.

    ``line`` carries the 1-based offending line number when known.
    """

    def __init__(self, message, line=None):
        super().__init__(message if line is None else f"line {line}: {message}")
        self.line = line


class NegativeCount(FileFormat):
    """A count field in a trace record is negative."""


class EmptyStratum(SecsimError):
    """No trace records match the requested (channel, label) stratum."""


class DegenerateComponent(SecsimError):
    """A mixture component collapsed below the variance floor."""


class ShapeMismatch(SecsimError):
    """Two kernels disagree on state or action spaces."""


class RewardMismatch(SecsimError):
    """Two kernels carry different reward tables where identical ones are required."""


class InvalidDiscount(SecsimError):
    """A discount factor lies outside [0, 1)."""


class ConfigError(SecsimError):
    """An experiment configuration file is invalid.

    ``field`` names the offending field as a dotted path.
    """

    def __init__(self, field, message):
        super().__init__(f"{field}: {message}")
        self.field = field


class NonFiniteLoss(SecsimError):
    """A training loss became NaN or infinite.

    ``update`` is the index of the gradient update that produced it.
    """

    def __init__(self, update, message="loss is not finite"):
        super().__init__(f"update {update}: {message}")
        self.update = update


class UnknownSession(SecsimError):
    """No live session exists under the given id."""


class SessionDone(SecsimError):
    """The episode already reached the terminal state."""


class IllegalAction(SecsimError):
    """An action is outside the kernel's action set or infeasible in the current state."""
