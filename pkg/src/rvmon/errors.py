"""Exception hierarchy shared by every rvmon module."""


class RVError(Exception):
    """Base class for all rvmon errors."""


class NonMonotoneTimestamp(RVError):
    pass


class KindMismatch(RVError):
    pass


class DivisionByZero(RVError, ArithmeticError):
    pass


class TraceFormatError(RVError):
    pass


class UnboundChannel(RVError):
    pass


class ConfigError(RVError):
    pass


class UnknownChannel(RVError):
    pass


class ScheduleOutOfRange(RVError):
    pass


class InvalidClampValue(RVError):
    pass


class SpecError(RVError):
    """Error located in specification source text."""

    def __init__(self, message, line=None, column=None):
        self.message = message
        self.line = line
        self.column = column
        if line is not None:
            message = f"{line}:{column}: {message}"
        super().__init__(message)


class SpecSyntaxError(SpecError):
    pass


class DuplicateName(SpecError):
    pass


class UnknownIdentifier(SpecError):
    pass


class SpecTypeError(SpecError):
    pass
