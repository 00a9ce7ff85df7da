"""Exception hierarchy shared by all nqac modules."""


class NQACError(Exception):
    """Base class for nqac errors."""


class InputError(NQACError, ValueError):
    """Invalid argument value or malformed input."""


class DimensionError(InputError):
    """Array/config length does not match the problem."""


class RangeViolationError(InputError):
    """A programmed field or coupling lies outside its allowed range."""


class CapacityError(NQACError):
    """Request exceeds an enumeration cap or the available hardware."""


class EmbeddingError(InputError):
    """An embedding fails validation."""


class ChainOverlapError(EmbeddingError):
    pass


class DisconnectedChainError(EmbeddingError):
    pass


class MissingCouplerError(EmbeddingError):
    pass


class UnbalancedEmbeddingError(EmbeddingError):
    pass


class ReferenceValueError(InputError):
    """Reference value M_0 cannot be reached on some curve."""


class DegenerateInputError(InputError):
    """Input is degenerate, e.g. a zero-norm vector."""
