class KermabError(Exception):
    """Base class for all package errors."""


class ConfigError(KermabError, ValueError):
    pass


class InputError(KermabError, ValueError):
    pass


class NumericalError(KermabError, ArithmeticError):
    pass


class ProtocolError(KermabError):
    """Message exchange between agents violated the round contract."""


class GenerationError(KermabError):
    pass


class ParseError(KermabError, ValueError):
    def __init__(self, message: str, line: int | None = None):
        self.line = line
        super().__init__(f"line {line}: {message}" if line is not None else message)
