"""Exception hierarchy shared by all castorlite modules.

Every operational failure raises a subclass of CastorError so the CLI and
HTTP layers can map them uniformly (exit code 1 / HTTP 4xx).
"""


class CastorError(Exception):
    """Base class for all castorlite errors."""

    http_status = 400


class NotFound(CastorError):
    http_status = 404


class Conflict(CastorError):
    http_status = 409


# --- semantic store ---

class DuplicateName(Conflict):
    pass


class InvalidCoordinates(CastorError):
    pass


class UnknownEntity(NotFound):
    pass


class UnknownSignal(NotFound):
    pass


class UnknownContext(NotFound):
    pass


class AlreadyBound(Conflict):
    pass


class SelfEdge(CastorError):
    pass


# --- timeseries engine ---

class UnknownSeries(NotFound):
    pass


class NonFiniteValue(CastorError):
    pass


class EmptyRange(CastorError):
    pass


class InvalidFrequency(CastorError):
    pass


class NonPositiveScale(CastorError):
    pass


class UnalignedInput(CastorError):
    pass


class NoProvider(CastorError):
    pass


class MissingCoordinates(CastorError):
    pass


# --- model registry ---

class MalformedConfig(CastorError):
    pass


class UnresolvableImplementation(NotFound):
    pass


class UnknownModel(NotFound):
    pass


class NoVersions(NotFound):
    pass


class UnknownVersion(NotFound):
    pass


class IncompleteRanking(CastorError):
    pass


class BlobTooLarge(CastorError):
    pass


# --- scheduler ---

class MalformedSchedule(CastorError):
    pass


# --- executor ---

class RunnerCrashed(CastorError):
    pass


class RunnerTimeout(CastorError):
    pass


class MalformedResult(CastorError):
    pass


# --- forecast store ---

class NonCausalPoint(CastorError):
    pass


class DuplicateIssue(Conflict):
    pass


class LengthMismatch(CastorError):
    pass


class ZeroActual(CastorError):
    pass


class NoOverlap(CastorError):
    pass


# --- scalability harness ---

class NonPositiveDuration(CastorError):
    pass


class ServiceUnavailable(CastorError):
    pass


# --- service config ---

class BadConfig(CastorError):
    pass
