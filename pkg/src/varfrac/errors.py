"""Exception types raised across the package."""


class DomainError(ValueError):
    """Invalid grid or domain configuration."""


class ExponentError(ValueError):
    """Exponent field violates its bounds, symmetry or subcriticality."""


class KernelError(ValueError):
    """Kernel fails an admissibility precondition."""


class X0Error(ValueError):
    """A function that must vanish outside the domain does not."""


class ConvergenceError(RuntimeError):
    """An iterative method hit its cap without meeting tolerance."""

    def __init__(self, message, best=None):
        super().__init__(message)
        self.best = best
