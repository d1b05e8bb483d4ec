"""Exception hierarchy shared by all modules."""


class PssError(Exception):
    """Base class for every error raised by this package."""


class JetSyntaxError(PssError):
    def __init__(self, message, position=None, source=None):
        self.position = position
        self.source = source
        if position is not None:
            message = f"{message} at position {position}"
        super().__init__(message)


class UnknownIdentifierError(JetSyntaxError):
    pass


class JetOrderError(PssError):
    """A jet coordinate would exceed the order cap."""


class JetDomainError(PssError):
    """Evaluation left the domain of an elementary function."""

    def __init__(self, message, subexpression=None):
        self.subexpression = subexpression
        if subexpression is not None:
            message = f"{message} in '{subexpression}'"
        super().__init__(message)


class MissingValueError(PssError, KeyError):
    def __str__(self):
        return Exception.__str__(self)


class SubstitutionError(PssError):
    """The equation's differential consequences cannot be solved explicitly."""


class SamplerExhaustedError(PssError):
    pass


class HypothesisViolation(PssError):
    def __init__(self, message, which=None, witness=None):
        self.which = which
        self.witness = witness
        super().__init__(message)


class InvalidParameterError(PssError, ValueError):
    pass


class NonZeroMeanError(PssError, ValueError):
    pass


class BlowUpError(PssError):
    def __init__(self, message, time=None):
        self.time = time
        super().__init__(message)


class StencilError(PssError, IndexError):
    pass


class EmptyRegionError(PssError):
    pass


class DisconnectedRegionError(PssError):
    def __init__(self, message, components=None):
        self.components = components or []
        super().__init__(message)


class FrameDriftError(PssError):
    def __init__(self, message, drift=None):
        self.drift = drift
        super().__init__(message)
