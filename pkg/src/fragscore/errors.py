"""Exception hierarchy shared across the toolkit.

Library code raises these; the CLI maps them onto distinct exit codes
(usage 2, input/output 3, schema/data 4).
"""


class FragscoreError(Exception):
    """Base class for all toolkit errors."""


class MeasurementError(FragscoreError):
    """A pair is invalid for measurement (e.g. zero-length summary)."""


class UrlError(FragscoreError):
    """A URL could not be parsed or canonicalized."""


class ExtractionError(FragscoreError):
    """A page yields no usable body or summary and must be excluded."""


class FetchError(FragscoreError):
    """A snapshot could not be retrieved."""

    def __init__(self, message, status=None):
        super().__init__(message)
        self.status = status


class ConfigError(FragscoreError):
    """The config file is malformed or holds an invalid value."""


class SchemaError(FragscoreError):
    """An input file violates its declared row schema."""
