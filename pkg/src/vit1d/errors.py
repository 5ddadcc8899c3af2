"""Exception hierarchy shared by all modules."""


class Vit1dError(Exception):
    """Base class for every error raised by this package."""


class DecodeError(Vit1dError):
    pass


class EmptyInputError(Vit1dError):
    pass


class ConfigError(Vit1dError, ValueError):
    pass


class ConfigMismatchError(ConfigError):
    pass


class InsufficientDurationError(Vit1dError, ValueError):
    pass


class ShapeError(Vit1dError, ValueError):
    pass


class NumericFaultError(Vit1dError, FloatingPointError):
    """Non-finite weights or activations; ``layer`` names the first offender."""

    def __init__(self, message, layer=None):
        super().__init__(message)
        self.layer = layer


class DegenerateBatchError(Vit1dError, ValueError):
    pass


class UndefinedCosineError(Vit1dError, ValueError):
    pass


class ContractError(Vit1dError, ValueError):
    pass


class CorruptCheckpointError(Vit1dError):
    pass


class DataError(Vit1dError, ValueError):
    pass


class ParseError(Vit1dError, ValueError):
    pass


class MetricUndefinedError(Vit1dError, ValueError):
    pass


class RenderError(Vit1dError, ValueError):
    pass


class TrainingDivergedError(Vit1dError):
    pass
