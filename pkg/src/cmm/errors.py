"""Exception types raised by the toolkit."""

from __future__ import annotations


class CMMError(Exception):
    """Base class for every error raised by :mod:`cmm`."""


class ShapeError(CMMError, ValueError):
    """Operands have incompatible dimensions."""


class DomainError(CMMError, ValueError):
    """Input lies outside the domain of an operation (e.g. non-Hermitian)."""


class InputError(CMMError, ValueError):
    """Malformed user input (partial maps, repeated labels, ...)."""


class ModelLookupError(CMMError, KeyError):
    """Unknown context, observable, instrument or outcome."""

    def __str__(self) -> str:  # KeyError quotes its message otherwise
        return str(self.args[0]) if self.args else ""


class ConditioningError(CMMError, ValueError):
    """Attempt to condition on an outcome of (numerically) zero probability."""

    def __init__(self, context, observable, outcome, prob: float | None = None):
        self.context = context
        self.observable = observable
        self.outcome = outcome
        self.prob = prob
        msg = f"cannot condition on {observable}={outcome!r} in context {context!r}"
        if prob is not None:
            msg += f" (probability {prob:.3e})"
        super().__init__(msg)


class PreconditionError(CMMError):
    """An operation's precondition (e.g. conditional compatibility) fails."""


class InvariantError(CMMError, ValueError):
    """A domain object violates one of its invariants."""

    def __init__(self, invariant: str, residual: float | None = None, detail: str = ""):
        self.invariant = invariant
        self.residual = residual
        msg = f"invariant '{invariant}' violated"
        if residual is not None:
            msg += f" (residual {residual:.3e})"
        if detail:
            msg += f": {detail}"
        super().__init__(msg)
