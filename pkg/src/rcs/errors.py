"""Exception types shared across the package."""


class RcsError(Exception):
    """Base class for package errors."""


class DomainError(RcsError, ValueError):
    """A point lies outside the domain it was evaluated on."""


class CapabilityError(RcsError, RuntimeError):
    """An operation needs a facility (e.g. quadrature) the domain lacks."""


class DataError(RcsError, ValueError):
    """Input data violates a contract (non-Hermitian Gram, nonpositive u, ...)."""


class SamplerError(RcsError, RuntimeError):
    """The Markov chain sampler failed to make progress."""


class NonTerminationError(RcsError, RuntimeError):
    """An iteration hit its cap without converging.

    Carries the diagnostic trace of the quantity that was being driven down.
    """

    def __init__(self, message, trace=None, last_result=None):
        super().__init__(message)
        self.trace = list(trace) if trace is not None else []
        self.last_result = last_result
