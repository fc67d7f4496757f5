"""Exception hierarchy.

Everything raised on purpose derives from ``SnpformerError`` so the CLI can
map it to an exit code. ``NumericError`` is the only internal-failure class.
"""


class SnpformerError(Exception):
    """Base class for user, config and data errors."""


class ConfigError(SnpformerError, ValueError):
    pass


class InvalidBase(SnpformerError, ValueError):
    def __init__(self, symbol):
        super().__init__(f"invalid base {symbol!r}; expected one of A, T, C, G, N")
        self.symbol = symbol


class ParseError(SnpformerError, ValueError):
    def __init__(self, message, offset=None, line=None, path=None):
        where = []
        if path is not None:
            where.append(str(path))
        if line is not None:
            where.append(f"line {line}")
        if offset is not None:
            where.append(f"offset {offset}")
        prefix = f"{':'.join(where)}: " if where else ""
        super().__init__(prefix + message)
        self.offset = offset
        self.line = line
        self.path = path


class EmptySequence(SnpformerError, ValueError):
    pass


class TokenizeError(SnpformerError, ValueError):
    pass


class SequenceTooShort(TokenizeError):
    pass


class NotInvertible(TokenizeError):
    pass


class ShapeError(SnpformerError, ValueError):
    pass


class RankError(ShapeError):
    pass


class VocabError(SnpformerError, IndexError):
    pass


class LabelError(SnpformerError, ValueError):
    pass


class JoinError(SnpformerError, KeyError):
    def __init__(self, sample_id, message=None):
        super().__init__(message or f"sample {sample_id!r} has no phenotype row")
        self.sample_id = sample_id

    def __str__(self):
        return self.args[0]


class LengthError(SnpformerError, ValueError):
    pass


class DataValueError(SnpformerError, ValueError):
    """Unparseable value in an input file (carries the line number)."""


class DegenerateInput(SnpformerError, ValueError):
    pass


class FormatError(SnpformerError, ValueError):
    pass


class CorruptionError(FormatError):
    pass


class NumericError(ArithmeticError):
    """Non-finite values where finite ones are required."""
