"""Exception hierarchy shared across the pipeline."""


class SentinelError(Exception):
    """Base class for all pipeline errors."""


class ParseError(SentinelError):
    """A traffic record line could not be parsed.

    ``code`` is the stable reject-reason key used in ingest reports;
    ``field`` names the offending input field when one can be identified.
    """

    code = "parse_error"

    def __init__(self, message: str, field: str | None = None):
        super().__init__(message)
        self.field = field


class MissingField(ParseError):
    code = "missing_field"


class InvalidTimestamp(ParseError):
    code = "invalid_timestamp"


class NegativeDuration(ParseError):
    code = "negative_duration"


class IoFailure(SentinelError):
    """Underlying stream or file could not be read or written."""


class ConfigError(SentinelError):
    """Rule configuration is invalid; ``key`` names the bad entry."""

    def __init__(self, key: str, message: str | None = None):
        super().__init__(message or f"invalid rule config entry: {key}")
        self.key = key


class UnknownLevel(SentinelError):
    """Requested aggregation level is not supported."""


class WindowTooSmall(SentinelError):
    """Trailing window must cover at least two buckets."""


class FeatureError(SentinelError):
    """Base class for featurization errors."""


class EmptyCorpus(FeatureError):
    """No sessions supplied to vocabulary building."""


class EmptyVocabulary(FeatureError):
    """Every token fell below the document-frequency floor."""


class UnknownSessionId(SentinelError):
    def __init__(self, session_id: str):
        super().__init__(f"unknown session id: {session_id}")
        self.session_id = session_id


class ModelError(SentinelError):
    """Base class for model errors."""


class DimensionMismatch(ModelError):
    pass


class WrongModelKind(ModelError):
    pass


class SingleClassDataset(ModelError):
    pass


class LengthMismatch(ModelError):
    pass


class TooFewExamples(ModelError):
    pass


class InfeasibleProfile(SentinelError):
    """Generator profile cannot be satisfied (e.g. not enough location/date slots)."""


class CorruptState(SentinelError):
    """Persisted application state is missing pieces or fails integrity checks."""


class InsufficientLabels(SentinelError):
    def __init__(self, class_name: str, needed: int, have: int):
        super().__init__(
            f"need at least {needed} '{class_name}' labels, have {have}"
        )
        self.class_name = class_name
        self.needed = needed
        self.have = have
