"""Exception types shared across the package.

Plain ``ValueError`` is used for ordinary argument validation; the classes
here mark failure modes callers may want to handle separately.
"""


class DegenerateInputError(ValueError):
    """Input is structurally valid but numerically degenerate (zero
    denominator, zero-mean reference signal, ...)."""


class FormatError(ValueError):
    """A file exists but does not conform to its documented format."""


class StiffnessError(RuntimeError):
    """The integrator could not proceed (step underflow or step budget
    exhausted). Carries the time at which integration failed."""

    def __init__(self, message: str, t: float):
        super().__init__(message)
        self.t = t


class NumericError(ArithmeticError):
    """A non-finite value was produced while debug checks were active."""
