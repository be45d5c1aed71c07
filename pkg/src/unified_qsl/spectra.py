"""Energy spectra, their moments, orthogonality times and QSL regimes.

Units: hbar = 1, so energies are angular frequencies and times are their
reciprocals.
"""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass
from typing import NamedTuple, Sequence

import numpy as np
from scipy import optimize
from scipy.special import logsumexp

from .errors import (
    InvalidSpectrumError,
    MissingMaxEnergyError,
    StationaryStateError,
)

HBAR = 1.0
POPULATION_TOL = 1e-12
REGIME_RTOL = 1e-9


@dataclass(frozen=True)
class EnergySpectrum:
    """Discrete energy levels with occupation probabilities.

    ``ground_energy`` defaults to the lowest listed level and may sit below it
    (an unoccupied ground level). ``max_energy`` is ``None`` for spectra that
    are unbounded above; dual quantities are then unavailable.
    """

    energies: np.ndarray
    populations: np.ndarray
    ground_energy: float = None  # type: ignore[assignment]
    max_energy: float | None = None

    def __post_init__(self):
        e = np.atleast_1d(np.asarray(self.energies, dtype=float)).copy()
        w = np.atleast_1d(np.asarray(self.populations, dtype=float)).copy()
        if e.ndim != 1 or e.shape != w.shape or e.size == 0:
            raise InvalidSpectrumError("energies and populations must be equal-length 1-d arrays")
        if not (np.all(np.isfinite(e)) and np.all(np.isfinite(w))):
            raise InvalidSpectrumError("non-finite energy or population")
        if np.any(w < 0):
            raise InvalidSpectrumError("populations must be non-negative")
        if abs(w.sum() - 1.0) > POPULATION_TOL:
            raise InvalidSpectrumError(f"populations sum to {w.sum()!r}, not 1")
        e0 = float(e.min()) if self.ground_energy is None else float(self.ground_energy)
        if np.any(e < e0):
            raise InvalidSpectrumError("ground_energy exceeds a level energy")
        emax = self.max_energy
        if emax is not None:
            emax = float(emax)
            if np.any(e > emax):
                raise InvalidSpectrumError("max_energy is below a level energy")
        e.flags.writeable = False
        w.flags.writeable = False
        object.__setattr__(self, "energies", e)
        object.__setattr__(self, "populations", w)
        object.__setattr__(self, "ground_energy", e0)
        object.__setattr__(self, "max_energy", emax)

    @classmethod
    def from_levels(cls, levels: Sequence[tuple[float, float]], ground_energy=None, max_energy=None):
        energies, pops = zip(*levels)
        return cls(np.array(energies), np.array(pops), ground_energy, max_energy)

    @classmethod
    def two_level(cls, rho1: float, eps1: float, bounded: bool = True) -> "EnergySpectrum":
        """Ground level at 0, excited level ``eps1`` holding population ``rho1``."""
        return cls(
            np.array([0.0, eps1]),
            np.array([1.0 - rho1, rho1]),
            ground_energy=0.0,
            max_energy=eps1 if bounded else None,
        )

    def shifted(self, c: float) -> "EnergySpectrum":
        emax = None if self.max_energy is None else self.max_energy + c
        return EnergySpectrum(self.energies + c, self.populations, self.ground_energy + c, emax)

    def overlap(self, t):
        """Exact survival amplitude |sum_n rho_n exp(-i e_n t)| of a pure state."""
        t = np.asarray(t, dtype=float)
        phase = np.exp(-1j * np.multiply.outer(t, self.energies - self.ground_energy))
        return np.abs(phase @ self.populations)


@dataclass(frozen=True)
class MomentSummary:
    mean: float
    std: float
    e0: float = 0.0
    emax: float | None = None

    @property
    def mean_excess(self) -> float:
        """Mean energy above the ground level."""
        return self.mean - self.e0

    @property
    def dual_mean(self) -> float | None:
        return None if self.emax is None else self.emax - self.mean


class Regime(str, enum.Enum):
    ML = "ML"
    DUAL_ML = "DualML"
    MT = "MT"
    CRITICAL = "Critical"


class OrthogonalityTimes(NamedTuple):
    tau_mt: float
    tau_p: float
    tau_p_star: float | None


def moments(spectrum: EnergySpectrum) -> MomentSummary:
    w, e = spectrum.populations, spectrum.energies
    mean = float(w @ e)
    std = math.sqrt(max(float(w @ (e - mean) ** 2), 0.0))
    return MomentSummary(mean, std, spectrum.ground_energy, spectrum.max_energy)


def _log_power_sum(gaps: np.ndarray, weights: np.ndarray, p: float) -> float:
    """log sum_n w_n gap_n^p, or -inf when no occupied level has a positive gap."""
    mask = (gaps > 0) & (weights > 0)
    if not np.any(mask):
        return -math.inf
    return float(logsumexp(np.log(weights[mask]) + p * np.log(gaps[mask])))


def _check_p(p):
    if not (p > 0 and math.isfinite(p)):
        raise InvalidSpectrumError(f"moment order must be positive and finite, got {p!r}")


def moment_Ep(spectrum: EnergySpectrum, p: float) -> float:
    """p-th order energy moment <(H - e0)^p>^(1/p); p need not be an integer."""
    _check_p(p)
    gaps = spectrum.energies - spectrum.ground_energy
    log_sum = _log_power_sum(gaps, spectrum.populations, p)
    return 0.0 if log_sum == -math.inf else math.exp(log_sum / p)


def dual_moment_Ep(spectrum: EnergySpectrum, p: float) -> float:
    """Dual moment <(e_max - H)^p>^(1/p)."""
    _check_p(p)
    if spectrum.max_energy is None:
        raise MissingMaxEnergyError("spectrum has no maximum energy")
    gaps = spectrum.max_energy - spectrum.energies
    log_sum = _log_power_sum(gaps, spectrum.populations, p)
    return 0.0 if log_sum == -math.inf else math.exp(log_sum / p)


def _tau_from_log_sum(log_sum: float, p: float) -> float:
    # pi hbar / (2^(1/p) E_p) evaluated in log space; huge 1/p is common for p << 1
    return math.pi * HBAR * math.exp(min(-(math.log(2.0) + log_sum) / p, 700.0))


def gml_time(spectrum: EnergySpectrum, p: float) -> float:
    _check_p(p)
    log_sum = _log_power_sum(spectrum.energies - spectrum.ground_energy, spectrum.populations, p)
    if log_sum == -math.inf:
        raise StationaryStateError("E_p = 0: state sits in the ground level")
    return _tau_from_log_sum(log_sum, p)


def dual_gml_time(spectrum: EnergySpectrum, p: float) -> float:
    _check_p(p)
    if spectrum.max_energy is None:
        raise MissingMaxEnergyError("spectrum has no maximum energy")
    log_sum = _log_power_sum(spectrum.max_energy - spectrum.energies, spectrum.populations, p)
    if log_sum == -math.inf:
        raise StationaryStateError("E_p* = 0: state sits in the top level")
    return _tau_from_log_sum(log_sum, p)


def mt_time(spectrum: EnergySpectrum) -> float:
    std = moments(spectrum).std
    if std == 0.0:
        raise StationaryStateError("energy standard deviation is zero")
    return math.pi * HBAR / (2.0 * std)


def orthogonality_times(spectrum: EnergySpectrum, p: float) -> OrthogonalityTimes:
    tau_mt = mt_time(spectrum)
    tau_star = None if spectrum.max_energy is None else dual_gml_time(spectrum, p)
    return OrthogonalityTimes(tau_mt, gml_time(spectrum, p), tau_star)


def classify_regime(obj: EnergySpectrum | MomentSummary, tol: float = REGIME_RTOL) -> Regime:
    """ML / dual-ML / MT regime from first moments, Critical on a boundary.

    ``tol`` is relative to the larger of the compared quantities. A stationary
    state (all moments zero) sits on every boundary and reports Critical.
    """
    m = moments(obj) if isinstance(obj, EnergySpectrum) else obj
    de, mean = m.std, m.mean_excess
    scale = max(de, abs(mean), 1e-300)
    if abs(de - mean) <= tol * scale:
        return Regime.CRITICAL
    if de - mean > tol * scale:
        return Regime.ML
    dual = m.dual_mean
    if dual is not None:
        dscale = max(de, abs(dual), 1e-300)
        if abs(de - dual) <= tol * dscale:
            return Regime.CRITICAL
        if de - dual > tol * dscale:
            return Regime.DUAL_ML
    return Regime.MT


def coherent_moments(alpha: complex, nu: float) -> MomentSummary:
    a = abs(alpha)
    return MomentSummary(HBAR * nu * a * a, HBAR * nu * a, 0.0, None)


def squeezed_moments(r: float, nu: float) -> MomentSummary:
    if r < 0:
        raise ValueError("squeezing magnitude must be non-negative")
    return MomentSummary(
        HBAR * nu * math.sinh(r) ** 2,
        math.sqrt(2.0) * HBAR * nu * math.sinh(r) * math.cosh(r),
        0.0,
        None,
    )


def semicircle_feasible(mean_excess: float, std: float, width: float, slack: float = 1e-12) -> bool:
    """Bhatia-Davis: std^2 <= mean (width - mean) for spectra inside [0, width]."""
    return 0.0 <= mean_excess <= width and std * std <= mean_excess * (width - mean_excess) + slack


def ladder_spectrum(mean_excess: float, std: float, n_levels: int, width: float) -> EnergySpectrum:
    """Maximum-entropy spectrum on an evenly spaced ladder with the given moments.

    Levels sit at ``width * k / (n_levels - 1)``; populations take the form
    exp(a x + b x^2). Used as the representative state for a cell of the
    moment diagram. Raises InvalidSpectrumError when the moments cannot be met.
    """
    x = np.linspace(0.0, 1.0, n_levels)
    m1 = mean_excess / width
    m2 = (std / width) ** 2 + m1 * m1
    if not semicircle_feasible(m1, std / width, 1.0, 0.0) or std <= 0:
        raise InvalidSpectrumError("moments outside the feasible semicircle")

    def weights(theta):
        logits = theta[0] * x + theta[1] * x * x
        return np.exp(logits - logsumexp(logits))

    def residual(theta):
        w = weights(theta)
        f = np.array([w @ x - m1, w @ x ** 2 - m2])
        ex, ex2 = w @ x, w @ x ** 2
        cov = np.array(
            [[ex2 - ex * ex, w @ x ** 3 - ex * ex2], [w @ x ** 3 - ex * ex2, w @ x ** 4 - ex2 * ex2]]
        )
        return f, cov

    sol = optimize.root(residual, np.zeros(2), jac=True, method="hybr", options={"xtol": 1e-13})
    w = weights(sol.x)
    if abs(w @ x - m1) > 1e-9 or abs(w @ x ** 2 - m2) > 1e-9:
        raise InvalidSpectrumError("no ladder distribution matches these moments")
    w = w / w.sum()
    return EnergySpectrum(width * x, w, ground_energy=0.0, max_energy=width)


def mt_dominance_scan(spectrum: EnergySpectrum, p_grid, t_grid, slack: float = 1e-12) -> bool:
    """True when the MT bound is at least every (dual) GML bound at every sampled time.

    Outside the MT window the MT bound counts as 0, so any GML bound still
    positive there breaks dominance (a generalized crossover). Families with
    tau <= tau_MT are skipped: O_p(t~) <= cos(pi t~ / 2) puts them below the
    MT curve at every time.
    """
    from . import bounds

    t_grid = np.asarray(t_grid, dtype=float)
    std = moments(spectrum).std
    if std == 0.0:
        raise StationaryStateError("state does not evolve")
    tau_mt = mt_time(spectrum)
    mt = np.where(t_grid <= tau_mt, np.cos(np.minimum(std * t_grid / HBAR, math.pi / 2)), 0.0)
    for fam in bounds.applicable_families(spectrum, p_grid, mt=False):
        if fam.tau <= tau_mt:
            continue
        vals = bounds.family_values(fam, t_grid)
        if np.any(vals > mt + slack):
            return False
    return True
