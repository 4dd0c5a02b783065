"""Exception hierarchy shared by all ambivoice modules."""


class AmbivoiceError(Exception):
    """Base class for every error raised by this package."""


class ParseError(AmbivoiceError, ValueError):
    pass


class DimMismatch(AmbivoiceError, ValueError):
    pass


class DuplicateSpeaker(AmbivoiceError, ValueError):
    pass


class InsufficientData(AmbivoiceError, ValueError):
    pass


class DegenerateInput(AmbivoiceError, ValueError):
    pass


class EmptyInput(AmbivoiceError, ValueError):
    pass


class DomainError(AmbivoiceError, ValueError):
    """Coordinates fall outside the valid latitude/longitude box."""


class NegativeDensity(AmbivoiceError, ValueError):
    pass


class NoRidge(AmbivoiceError):
    """The ambiguity field is identically zero."""


class UnknownIndex(AmbivoiceError, KeyError):
    pass


class InvalidArgument(AmbivoiceError, ValueError):
    pass


class MixedVoices(AmbivoiceError, ValueError):
    pass


class ZeroVector(AmbivoiceError, ValueError):
    pass


class InvalidSpec(AmbivoiceError, ValueError):
    pass


class IoError(AmbivoiceError, OSError):
    pass
