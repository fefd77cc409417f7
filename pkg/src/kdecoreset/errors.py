"""Exception hierarchy shared by every module."""


class KDECoresetError(Exception):
    """Base class for all library errors."""


class InputError(KDECoresetError):
    """Malformed input data or arguments."""


class DomainError(InputError):
    """A point does not belong to the declared domain."""


class UnsupportedKernelError(InputError):
    """The kernel family is not positive definite on the requested domain."""


class BudgetExceededError(InputError):
    """A lattice query set would exceed the configured point budget."""

    def __init__(self, size: int, budget: int):
        super().__init__(
            f"lattice would contain {size} points (budget {budget}); "
            "use sampled queries instead"
        )
        self.size = size
        self.budget = budget


class PreconditionError(InputError):
    """An adversarial-instance precondition is violated."""


class NumericalError(KDECoresetError):
    """A numerical invariant failed beyond its tolerance."""


class NotPSDError(NumericalError):
    """A Gram matrix has an eigenvalue below the negative tolerance."""
