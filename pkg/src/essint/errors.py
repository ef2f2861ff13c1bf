"""Exception hierarchy for the integrator, oracles and model loader."""

from __future__ import annotations


class ESSError(Exception):
    """Base class for all errors raised by :mod:`essint`."""


class IntegrationError(ESSError):
    """An integration run failed at a known time and state.

    ``t`` and ``x`` are filled in by the loop when the error propagates out of
    :func:`essint.integrate`, so callers always know where a run died.
    """

    def __init__(self, message: str, t: float | None = None, x=None):
        super().__init__(message)
        self.t = t
        self.x = x

    def annotate(self, t, x):
        if self.t is None:
            self.t = float(t)
        if self.x is None:
            self.x = x.copy()
        return self

    def __str__(self):
        msg = super().__str__()
        if self.t is not None:
            msg += f" (t={self.t:.17g})"
        return msg


class StepUnderflow(IntegrationError):
    pass


class Divergence(IntegrationError):
    pass


class LivenessViolation(IntegrationError):
    pass


class NoCandidate(IntegrationError):
    pass


class LoopBudgetExceeded(IntegrationError):
    pass


class TangentialCrossing(ESSError):
    pass


class RootNonConvergence(ESSError):
    pass


class EmptyTrajectory(ESSError):
    pass


class InsufficientPoints(ESSError):
    pass


class DegenerateScale(ESSError):
    pass


class ModelParseError(ESSError):
    pass


class ModelValidationError(ESSError):
    pass
