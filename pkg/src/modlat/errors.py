"""Exception types shared across modlat."""


class ModlatError(Exception):
    """Base class for domain errors (CLI exit code 1)."""


class ParseError(ModlatError, ValueError):
    def __init__(self, message, pos):
        super().__init__(f"{message} at position {pos}")
        self.pos = pos


class CapacityExceeded(ModlatError):
    pass


class ContextError(ModlatError):
    """A formula or minterm does not fit the requested context."""


class NotPrimeError(ModlatError):
    pass


class EnumerationBoundError(ModlatError):
    pass
