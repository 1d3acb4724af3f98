"""Exception hierarchy shared by all blockpower modules."""


class BlockPowerError(Exception):
    """Base class for every error raised by this package."""


class ParseError(BlockPowerError):
    pass


class StochasticityError(BlockPowerError):
    def __init__(self, message, row=None):
        super().__init__(message)
        self.row = row


class DuplicateEntryError(BlockPowerError):
    pass


class DimensionMismatch(BlockPowerError, ValueError):
    pass


class AllColumnsZero(BlockPowerError):
    pass


class NoConvergence(BlockPowerError):
    pass


class DependentColumns(BlockPowerError):
    pass


class NumericalBreakdown(BlockPowerError):
    pass


class NegativeMassError(BlockPowerError):
    """Extracted vector carries significant negative mass.

    ``residual`` and ``effective_rank`` describe the rejected candidate so
    callers can still log the checkpoint.
    """

    def __init__(self, message, residual=float("nan"), effective_rank=0):
        super().__init__(message)
        self.residual = residual
        self.effective_rank = effective_rank


class InsufficientData(BlockPowerError):
    pass


class InvalidParameters(BlockPowerError, ValueError):
    pass


class SingularSystem(BlockPowerError):
    pass


class NotReversible(BlockPowerError):
    pass
