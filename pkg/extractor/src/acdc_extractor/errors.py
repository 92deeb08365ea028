"""Extractor error types."""


class ExtractorError(Exception):
    pass


class ModelUnavailable(ExtractorError):
    pass


class NoObjectsDetected(ExtractorError):
    pass


class MissingSnapshot(ExtractorError):
    pass


class DelegateUnavailable(ExtractorError):
    pass


class MissingFixture(ExtractorError):
    pass
