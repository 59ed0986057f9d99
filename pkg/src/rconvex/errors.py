class PreconditionError(ValueError):
    """Input violates a documented precondition (CLI exit code 3)."""


class DisconnectedDomainError(PreconditionError):
    pass


class NumericalError(RuntimeError):
    """A solver failed or produced an untrustworthy result (CLI exit code 4)."""
