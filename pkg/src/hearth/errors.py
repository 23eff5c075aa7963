"""Exception types shared across the package.

Every error carries a stable machine-readable ``code`` that the HTTP layer
and the CLI surface verbatim.
"""


class HearthError(Exception):
    code = "error"


class BadRequestError(HearthError):
    code = "bad-request"


class UnknownPortError(HearthError):
    code = "unknown-port"


class ChannelRangeError(HearthError):
    code = "channel-out-of-range"


class DuplicateChannelError(HearthError):
    code = "duplicate-channel"


class DuplicateNameError(HearthError):
    code = "duplicate-name"


class UnknownApplianceError(HearthError):
    code = "unknown-appliance"


class UnknownChannelError(HearthError):
    code = "unknown-channel"


class UnknownJobError(HearthError):
    code = "unknown-id"


class BadDatetimeError(HearthError):
    code = "unparseable-datetime"


class ClockRegressionError(HearthError):
    code = "clock-regression"


class LexiconError(HearthError):
    code = "lexicon-parse"


class UnknownPhonemeError(HearthError):
    code = "unknown-phoneme"


class EmptyUtteranceError(HearthError):
    code = "empty-utterance"


class UnknownWordError(HearthError):
    code = "unknown-word"


class ConfigError(HearthError):
    code = "invalid-config"


class PersistenceError(HearthError):
    code = "persistence-io"


class CorruptSnapshotError(PersistenceError):
    code = "corrupt-snapshot"
