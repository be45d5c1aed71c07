"""Exception types raised across the package."""


class QSLError(Exception):
    """Base class for all package errors."""


class DomainError(QSLError, ValueError):
    """An argument lies outside the domain where the quantity is defined."""


class InvalidSpectrumError(QSLError, ValueError):
    pass


class MissingMaxEnergyError(QSLError, ValueError):
    """Dual quantities need a spectrum with a finite maximum energy."""


class StationaryStateError(QSLError, ValueError):
    """The state does not evolve (zero energy spread), so no orthogonality time exists."""


class UnreachableOverlapError(QSLError, ValueError):
    pass


class DegenerateStateError(QSLError, ValueError):
    pass


class CutoffTooSmallError(QSLError, ValueError):
    pass


class DimensionMismatchError(QSLError, ValueError):
    pass


class InvalidPopulationsError(QSLError, ValueError):
    pass


class UnderdeterminedError(QSLError, ValueError):
    """Too few swap samples to fit the requested number of populations."""


class InsufficientDataError(QSLError, ValueError):
    """The displaced-record design matrix does not determine the density matrix."""


class ConfigError(QSLError, ValueError):
    pass


class BoundViolationError(QSLError, AssertionError):
    """A simulated overlap fell below a lower bound inside its validity window."""

    def __init__(self, bound: str, t: float, overlap: float, value: float):
        super().__init__(
            f"overlap {overlap:.12g} < bound {bound} = {value:.12g} at t = {t:.12g}"
        )
        self.bound = bound
        self.t = t
        self.overlap = overlap
        self.value = value
