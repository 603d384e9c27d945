"""Exception hierarchy shared by all modules."""


class WignerCLTError(Exception):
    """Base class for errors raised by the library."""


class DomainError(WignerCLTError, ValueError):
    """A spectral parameter lies outside the admissible domain."""


class ConstructionError(WignerCLTError, ValueError):
    """A variance profile or test function could not be constructed."""


class HypothesisViolation(WignerCLTError, ValueError):
    """A run configuration violates the scale hypothesis of the CLT."""


class NumericError(WignerCLTError, ArithmeticError):
    """A numerical routine failed or missed its error tolerance."""


class ConvergenceError(NumericError):
    """An iterative or adaptive procedure did not converge."""


class NearSingularityError(NumericError):
    """A linear system is too close to singular to be trusted."""
