# backend/errors.py - Exception hierarchy shared by every detection layer
# Library modules raise these; only main.py turns them into exit codes.


class IdsError(Exception):
    """Base class for every error raised by the detection engine."""


# ─── DHCP codec ───
class InvariantViolation(IdsError):
    pass


class MalformedPacket(IdsError):
    pass


# ─── Verifier ───
class NotAServerMessage(IdsError):
    pass


class MixedXid(IdsError):
    pass


class DuplicateFingerprint(IdsError):
    pass


class PoolExhausted(IdsError):
    pass


# ─── Signature engine ───
class DuplicateRuleId(IdsError):
    pass


class BadPattern(IdsError):
    pass


# ─── Anomaly engine ───
class EmptyWindowSet(IdsError):
    pass


# ─── Pipeline ───
class OutOfOrderEvent(IdsError):
    pass


class StaleVersion(IdsError):
    pass


# ─── Simulator ───
class InvalidSpec(IdsError):
    pass


class MalformedEventFile(IdsError):
    pass


# ─── Metrics ───
class UndefinedMetric(IdsError):
    pass


class DomainError(IdsError):
    pass


class StrictModeViolation(IdsError):
    pass


class TruthMismatch(IdsError):
    pass


# ─── Alert archive ───
class ArchiveError(IdsError):
    pass


# ─── Configuration / CLI ───
class PolicyParseError(IdsError):
    pass


class PolicyInvariantError(IdsError):
    pass


class UsageError(IdsError):
    pass


class SelfTestFailure(IdsError):
    pass


# Raised for bad invocations or bad input documents; the CLI maps these to exit code 2.
USAGE_ERRORS = (UsageError, PolicyParseError, PolicyInvariantError, InvalidSpec)
