"""Exception types shared across the solvers."""


class ExpsumsError(Exception):
    """Base class for numerical failures raised by this package."""


class IllPosedError(ExpsumsError):
    """A linear system is too ill-conditioned (or rank deficient) to trust.

    Carries the offending condition estimate when one is available.
    """

    def __init__(self, message, condition=None):
        super().__init__(message)
        self.condition = condition


class DomainError(ExpsumsError, ValueError):
    """A requested evaluation point falls outside the model's interval."""


class DivisionHazardError(ExpsumsError):
    """Normalization would divide by a vanishing structural function H."""


class CapabilityError(ExpsumsError):
    """The model lacks the symbolic/derivative data required by an operation."""


class DegeneratePencilError(ExpsumsError):
    """The shifted-invariance pencil is numerically singular."""


class DegenerateStepError(ExpsumsError):
    """The Gauss-Newton normal matrix is numerically singular."""


class NumericalFailureError(ExpsumsError):
    """An iteration produced non-finite values; carries the trace so far."""

    def __init__(self, message, trace=None):
        super().__init__(message)
        self.trace = trace
