"""Exception types shared across the package."""


class DriftDetError(Exception):
    """Base class for all errors raised by this package."""


class FormatError(DriftDetError):
    """A file did not parse under its declared format."""

    def __init__(self, message, line_no=None):
        self.line_no = line_no
        if line_no is not None:
            message = f"line {line_no}: {message}"
        super().__init__(message)


class EmptyCorpus(DriftDetError):
    """Loading or filtering produced zero usable documents."""


class EmptyAfterCleaning(DriftDetError):
    """No tokens survived text cleaning."""


class DegenerateVocabulary(DriftDetError):
    """Fewer than two distinct words available for training."""


class DimensionMismatch(DriftDetError):
    """Vector width disagrees with the expected dimension."""


class NoRepresentableTokens(DriftDetError):
    """Every token of a document is out of vocabulary."""


class ProviderError(DriftDetError):
    """A remote embedding provider failed after retries."""

    def __init__(self, status, body):
        self.status = status
        self.body = body
        super().__init__(f"provider returned status {status}: {body!r}")


class InsufficientData(DriftDetError):
    """Too few samples for the requested model."""


class NonFiniteLoss(DriftDetError):
    """Training diverged to a NaN or infinite loss."""

    def __init__(self, epoch, batch, value):
        self.epoch = epoch
        self.batch = batch
        super().__init__(f"non-finite loss {value!r} at epoch {epoch}, batch {batch}")


class UnlabeledDocument(DriftDetError):
    """A stratified operation met a document without a label."""


class ClassTooSmall(DriftDetError):
    """A label class has too few documents to split."""

    def __init__(self, label, count):
        self.label = label
        self.count = count
        super().__init__(f"class {label!r} has only {count} document(s)")


class ChecksumMismatch(DriftDetError):
    """A persisted file does not match its recorded SHA-256."""


class VersionUnsupported(DriftDetError):
    """A persisted model uses an unknown format version."""


class MissingFile(DriftDetError):
    """A required file is absent from a model directory."""


class ConfigError(DriftDetError):
    """A run configuration contains unknown or invalid keys."""
