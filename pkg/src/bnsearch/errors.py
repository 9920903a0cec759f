"""Exception types shared across the package."""


class BnSearchError(Exception):
    """Base class for all package errors."""


class CycleError(BnSearchError):
    def __init__(self, tail, head, message=None):
        self.tail = tail
        self.head = head
        super().__init__(message or f"arc {tail} -> {head} would close a directed cycle")


class DuplicateArcError(BnSearchError):
    pass


class MissingArcError(BnSearchError):
    pass


class DimensionMismatch(BnSearchError):
    pass


class SizeGuardError(BnSearchError):
    pass


class EmptyNeighbourhoodError(BnSearchError):
    pass


class ConfigError(BnSearchError):
    pass


class ValidationError(BnSearchError):
    pass


class ParseError(ValidationError):
    def __init__(self, message, line=None, path=None):
        self.line = line
        self.path = path
        where = ""
        if path is not None:
            where += f"{path}:"
        if line is not None:
            where += f"{line}: "
        elif where:
            where += " "
        super().__init__(where + message)
