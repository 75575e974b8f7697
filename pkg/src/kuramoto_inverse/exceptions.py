"""Exception hierarchy for kuramoto_inverse."""


class KuramotoError(Exception):
    """Base class for all package errors."""


class DisconnectedGraph(KuramotoError):
    pass


class NonPositiveWeight(KuramotoError):
    pass


class InvalidNetwork(KuramotoError):
    """Self-loops, duplicate edges or out-of-range endpoints."""


class DimensionMismatch(KuramotoError, ValueError):
    pass


class InvalidRange(KuramotoError, ValueError):
    pass


class NotInCutsetSpace(KuramotoError, ValueError):
    pass


class OverflowGuard(KuramotoError):
    pass


class DomainError(KuramotoError, ValueError):
    pass


class NoConvergence(KuramotoError):
    pass


class LeftDomain(KuramotoError):
    pass


class RankDeficient(KuramotoError):
    pass


class ParseError(KuramotoError):
    def __init__(self, message, line=None):
        self.line = line
        if line is not None:
            message = f"line {line}: {message}"
        super().__init__(message)


class DisconnectedCase(KuramotoError):
    pass


class NonPositiveReactance(KuramotoError):
    pass


class OracleFailed(KuramotoError):
    pass
