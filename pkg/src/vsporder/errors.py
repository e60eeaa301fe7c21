"""Exception hierarchy shared across the package."""


class VspError(Exception):
    """Base class for all errors raised by vsporder."""


class CycleDetected(VspError):
    pass


class UnknownActor(VspError):
    pass


class OracleBoundExceeded(VspError):
    pass


class ActorPresent(VspError):
    pass


class EdgeNotFound(VspError):
    pass


class LastActor(VspError):
    pass


class NotVsp(VspError):
    pass


class InvalidTree(VspError):
    pass


class ActorMismatch(VspError):
    pass


class OutOfSupport(VspError):
    pass


class EmptyTrace(VspError):
    pass


class InconsistentConsensus(VspError):
    pass


class UnknownGroup(VspError):
    pass


class DegenerateTrace(VspError):
    pass


class EmptyWindow(VspError):
    pass


class ParseError(VspError):
    pass


class UnknownActorId(ParseError):
    pass


class DuplicateInList(ParseError):
    pass


class ConfigError(VspError):
    pass


class SchemaMismatch(VspError):
    pass


class TruncatedTrace(SchemaMismatch):
    """Trace file ended early. ``partial`` holds whatever could be recovered."""

    def __init__(self, message, partial=None):
        super().__init__(message)
        self.partial = partial


class InterruptedRun(VspError):
    """Chain stopped before completion; ``trace`` holds the samples so far."""

    def __init__(self, message, trace=None):
        super().__init__(message)
        self.trace = trace
