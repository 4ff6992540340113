"""Exception types shared across the package.

Every error carries a stable CLI exit code so shell pipelines can branch on
failure class.  Codes 0 and 1 are reserved for success and unexpected errors,
2 for bad command-line usage.
"""

from __future__ import annotations


class ParaspaceError(Exception):
    exit_code = 1


class DuplicateVariable(ParaspaceError):
    exit_code = 10


class UnknownVariable(ParaspaceError):
    exit_code = 11


class InvalidValue(ParaspaceError):
    exit_code = 12


class UnknownRow(ParaspaceError):
    exit_code = 13


class ExpressionError(ParaspaceError):
    exit_code = 14


class UnboundedRegion(ParaspaceError):
    exit_code = 20


class UnsupportedAnalytic(ParaspaceError):
    exit_code = 21


class UnsupportedRegion(ParaspaceError):
    exit_code = 22


class RegionTooThin(ParaspaceError):
    exit_code = 23


class ParseError(ParaspaceError):
    exit_code = 24


class ProtocolError(ParaspaceError):
    exit_code = 30


class NodeUnavailable(ParaspaceError):
    exit_code = 31


class UnknownFeature(ParaspaceError):
    exit_code = 32


class UnsupportedCapability(ParaspaceError):
    exit_code = 33


class BatchAborted(ParaspaceError):
    """Raised when every worker connection is gone with rows still pending."""

    exit_code = 34

    def __init__(self, message: str, pending: set[int] | None = None):
        super().__init__(message)
        self.pending = set(pending or ())


class EmptySelection(ParaspaceError):
    exit_code = 40


class ZeroNormRow(ParaspaceError):
    exit_code = 41


class InvalidForL1(ParaspaceError):
    exit_code = 42


class InvalidMatrix(ParaspaceError):
    exit_code = 43


class EmbeddingLimitExceeded(ParaspaceError):
    exit_code = 44


class EmptyCluster(ParaspaceError):
    exit_code = 45


class StartupError(ParaspaceError):
    exit_code = 50
