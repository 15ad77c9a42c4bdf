"""Exception hierarchy shared by every stage of the toolkit."""


class MaldetectError(Exception):
    """Base class for all toolkit errors."""


class PeError(MaldetectError, ValueError):
    """Base class for PE parsing failures."""


class NotPeFile(PeError):
    """Input lacks the MZ magic or the PE signature."""


class Malformed(PeError):
    """Input claims to be a PE file but is structurally broken."""


class Unsupported(PeError):
    """Optional header magic is neither PE32 nor PE32+."""


class FormatError(MaldetectError, ValueError):
    """A corpus, results or model file failed validation."""

    def __init__(self, message: str, line: int | None = None):
        self.line = line
        if line is not None:
            message = f"line {line}: {message}"
        super().__init__(message)


class VersionError(FormatError):
    pass


class EmptyInput(MaldetectError, ValueError):
    pass


class LengthMismatch(MaldetectError, ValueError):
    pass


class SchemaMismatch(MaldetectError, ValueError):
    pass


class TooFewSamples(MaldetectError, ValueError):
    pass


class SingleClass(MaldetectError, ValueError):
    """Training data contains only one label."""


class DimensionMismatch(MaldetectError, ValueError):
    pass


class UndefinedMetric(MaldetectError, ArithmeticError):
    """Metric denominator is zero."""


class FoldTooSmall(MaldetectError, ValueError):
    pass


class InvalidSpec(MaldetectError, ValueError):
    """A synthetic PE spec or corpus profile violates its invariants."""


class DegenerateCorpusWarning(UserWarning):
    """Header ranking computed over a single-class corpus; every score is 0."""


class StageError(MaldetectError):
    """Wraps an error raised while building a pipeline, naming the stage."""

    def __init__(self, stage: str, cause: BaseException, fold: int | None = None):
        self.stage = stage
        self.cause = cause
        self.fold = fold
        where = stage if fold is None else f"fold {fold}, {stage}"
        super().__init__(f"{where}: {cause}")
