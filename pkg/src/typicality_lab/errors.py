"""Exception hierarchy shared by every module."""


class TypicalityError(Exception):
    """Base class. ``param`` names the offending argument when known."""

    def __init__(self, message, param=None):
        super().__init__(message)
        self.param = param


class DomainError(TypicalityError, ValueError):
    pass


class SaturationError(TypicalityError, ArithmeticError):
    """A probability sum exceeded one by more than the allowed slack."""


class DegenerateCoinError(DomainError):
    pass


class NonUnitaryError(DomainError):
    def __init__(self, message, deviation, param="u"):
        super().__init__(message, param)
        self.deviation = deviation


class RangeError(DomainError):
    pass


class BudgetError(DomainError):
    pass


class CapError(TypicalityError):
    """Requested materialization exceeds the configured cap."""


class EmptyEnsembleError(TypicalityError):
    pass
