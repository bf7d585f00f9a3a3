"""Exception hierarchy shared across the toolkit."""


class TsadError(Exception):
    """Base class for all toolkit errors."""


class EmptyInput(TsadError):
    """Raised when a series is constructed from zero points."""


class IrregularGranularity(TsadError):
    """Raised when more than the tolerated share of timestamp gaps deviate."""


class NonFiniteValue(TsadError):
    """Raised when NaN/Inf values cannot be repaired by interpolation."""


class TooShort(TsadError):
    """Input shorter than the minimum an operation requires."""


class SeriesTooShort(TooShort):
    """Series shorter than the requested window size."""


class ParamOutOfRange(TsadError):
    """Detector hyper-parameter outside its legal range."""


class LengthMismatch(TsadError):
    """Paired vectors (labels vs. values, predictions vs. truth) differ in length."""


class OutOfRange(TsadError):
    """Sensitivity value outside [0, 100]."""


class DegenerateData(TsadError):
    """Training data unusable (empty corpus, no feature variety, ...)."""


class SchemaMismatch(TsadError):
    """Persisted feature schema does not match the current extractor layout."""


class CorruptBundle(TsadError):
    """Bundle file unreadable: bad magic, truncated payload, or invalid JSON."""


class TooFew(TsadError):
    """Corpus too small to split."""


class BadSpec(TsadError):
    """Invalid synthetic-corpus specification."""
