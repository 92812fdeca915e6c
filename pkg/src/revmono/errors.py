"""Exception types raised across the package."""


class RevmonoError(Exception):
    """Base class for all package errors."""


class CapExceeded(RevmonoError):
    """An enumeration or LP size guard tripped."""

    def __init__(self, what: str, size: int, cap: int):
        super().__init__(f"{what}: size {size} exceeds cap {cap}")
        self.what = what
        self.size = size
        self.cap = cap


class DominanceViolation(RevmonoError):
    """A stochastic-dominance precondition does not hold."""


class NoSupportingPrices(RevmonoError):
    """No finite alpha admits supporting prices for some (type, bundle)."""


class Infeasible(RevmonoError):
    """An LP that must be feasible was reported infeasible."""


class DomainError(RevmonoError, ValueError):
    """A numeric parameter lies outside its admissible range."""
