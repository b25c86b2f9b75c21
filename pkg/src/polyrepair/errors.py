"""Exception types shared across the package."""


class PolyRepairError(Exception):
    """Base class for all errors raised by polyrepair."""


class ConfigurationError(PolyRepairError, ValueError):
    pass


class ParseError(PolyRepairError, ValueError):
    def __init__(self, message, line=None):
        if line is not None:
            message = f"line {line}: {message}"
        super().__init__(message)
        self.line = line


class ValidationError(PolyRepairError, ValueError):
    def __init__(self, message, ids=()):
        self.ids = list(ids)
        if self.ids:
            message = f"{message}: {', '.join(self.ids)}"
        super().__init__(message)


class FormatError(PolyRepairError, ValueError):
    pass


class DecodeError(PolyRepairError, ValueError):
    pass


class InputError(PolyRepairError, ValueError):
    pass


class CompatibilityError(PolyRepairError, ValueError):
    pass


class PreconditionError(PolyRepairError, ValueError):
    pass
