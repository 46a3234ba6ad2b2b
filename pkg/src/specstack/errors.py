"""Exception hierarchy. Everything derives from :class:`SpecStackError`."""


class SpecStackError(Exception):
    pass


class InvalidParameterError(SpecStackError, ValueError):
    pass


class SignalTooShortError(SpecStackError, ValueError):
    def __init__(self, message, channel=None):
        super().__init__(message)
        self.channel = channel


class EmptyBandError(SpecStackError, ValueError):
    pass


class DegenerateSourceError(SpecStackError, ValueError):
    pass


class RecordingTooShortError(SpecStackError, ValueError):
    pass


class FormatError(SpecStackError):
    """Malformed or unsupported input file."""


class WavParseError(FormatError):
    def __init__(self, message, offset=None):
        if offset is not None:
            message = f"{message} (at byte offset {offset})"
        super().__init__(message)
        self.offset = offset


class UnsupportedFormatError(FormatError):
    pass


class MagicMismatchError(FormatError):
    pass


class DtypeMismatchError(FormatError):
    pass


class LengthMismatchError(FormatError):
    pass


class RowError(FormatError):
    """A CSV row failed validation; ``line`` is 1-based and counts the header."""

    def __init__(self, message, line):
        super().__init__(f"line {line}: {message}")
        self.line = line


class UnknownLabelError(SpecStackError, ValueError):
    pass


class ShapeMismatchError(SpecStackError, ValueError):
    pass
