"""Exception hierarchy shared by every stage of the pipeline."""


class RansomflowError(Exception):
    """Base class for data and format errors (CLI exit code 2)."""


class UnsupportedFormat(RansomflowError):
    pass


class Truncated(RansomflowError):
    pass


class InvalidAddress(RansomflowError, ValueError):
    pass


class IrreversibleProjection(RansomflowError):
    pass


class IoError(RansomflowError, OSError):
    pass


class ParseError(RansomflowError):
    def __init__(self, message, line=None, path=None):
        self.line = line
        self.path = path
        where = ""
        if path is not None:
            where += f"{path}:"
        if line is not None:
            where += f"{line}:"
        super().__init__(f"{where} {message}" if where else message)


class DegenerateDistribution(RansomflowError, ValueError):
    pass


class EmptyTrainingSet(RansomflowError):
    pass


class SchemaMismatch(RansomflowError):
    pass


class StratificationInfeasible(RansomflowError):
    pass


class SplitInfeasible(UserWarning):
    """Emitted when a grouped split can only be satisfied on a best-effort basis."""
