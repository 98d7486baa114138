"""Exception types raised by the integrators and the experiment harness."""


class DomainError(ValueError):
    """An argument lies outside the domain of a function (non-finite input,
    singular potential, vanishing field where one is required)."""


class ConvergenceError(RuntimeError):
    """A fixed-point iteration did not reach its tolerance.

    ``residual`` holds the last increment norm; ``inner_residual`` is set by
    the nested solver of the nonuniform-field methods.
    """

    def __init__(self, message, residual=float("nan"), inner_residual=None, step_index=None):
        super().__init__(message)
        self.residual = residual
        self.inner_residual = inner_residual
        self.step_index = step_index


class UnsupportedInvariantError(ValueError):
    """The requested invariant is not defined for this problem."""


class ReferenceQualityError(RuntimeError):
    """A reference trajectory failed its step-halving self-check."""
