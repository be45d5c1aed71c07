"""Overlap lower bounds: MT, generalized ML (GML), dual GML and their envelope.

All bounds constrain the survival amplitude |<psi(0)|psi(t)>| of a pure state
evolving under a time-independent Hamiltonian. GML bounds of order p live on
the reduced time t / tau_p in [0, 1]; beyond the orthogonality time they are
undefined. hbar = 1 throughout.
"""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass
from typing import Iterable

import numpy as np

from . import kernels
from .errors import (
    DegenerateStateError,
    DomainError,
    MissingMaxEnergyError,
    UnreachableOverlapError,
)
from .spectra import (
    HBAR,
    EnergySpectrum,
    _log_power_sum,
    _tau_from_log_sum,
    moments,
)

N_SCAN = 4096
Z_TOL = 1e-12
T_TOL = 1e-12
DEFAULT_P_GRID = np.geomspace(0.1, 10.0, 61)


class BoundFamily(str, enum.Enum):
    MT = "MT"
    GML = "GML"
    DUAL_GML = "DualGML"
    QUADRATIC = "QuadraticGMLClosedForm"


@dataclass(frozen=True)
class BoundKind:
    family: BoundFamily
    p: float | None = None

    def __post_init__(self):
        if self.family in (BoundFamily.GML, BoundFamily.DUAL_GML):
            if self.p is None or not self.p > 0:
                raise DomainError(f"{self.family.value} bound needs an order p > 0")

    @property
    def label(self) -> str:
        if self.p is None:
            return self.family.value
        return f"{self.family.value}_p={self.p:.6g}"


@dataclass(frozen=True)
class BoundCurve:
    kind: BoundKind
    times: np.ndarray
    values: np.ndarray

    def __post_init__(self):
        t = np.asarray(self.times, dtype=float)
        v = np.asarray(self.values, dtype=float)
        if t.shape != v.shape or t.ndim != 1:
            raise ValueError("times and values must be matching 1-d arrays")
        if np.any(np.diff(t) <= 0):
            raise ValueError("sample times must be strictly increasing")
        if np.any((v < 0) | (v > 1)):
            raise ValueError("bound values must lie in [0, 1]")
        object.__setattr__(self, "times", t)
        object.__setattr__(self, "values", v)


@dataclass(frozen=True)
class TwoLevelState:
    """Ground level at energy 0, excited level ``eps1`` with population ``rho1``."""

    rho1: float
    eps1: float

    def __post_init__(self):
        if not 0.0 <= self.rho1 <= 1.0:
            raise DomainError("rho1 must lie in [0, 1]")
        if not self.eps1 > 0:
            raise DomainError("eps1 must be positive")

    @property
    def revival_time(self) -> float:
        return math.pi * HBAR / self.eps1

    def spectrum(self, bounded: bool = True) -> EnergySpectrum:
        return EnergySpectrum.two_level(self.rho1, self.eps1, bounded)


# ---------------------------------------------------------------------------
# reduced-time bound functions
# ---------------------------------------------------------------------------


def _check_order(p):
    if not (p > 0 and math.isfinite(p)):
        raise DomainError(f"order p must be positive and finite, got {p!r}")


def _reduced(t_tilde, upper: float = 1.0) -> np.ndarray:
    t = np.asarray(t_tilde, dtype=float)
    if np.any(~np.isfinite(t)) or np.any(t < 0) or np.any(t > upper):
        raise DomainError(f"reduced time must lie in [0, {upper:g}]")
    return t


def gml_constraint_residual(z: float, p: float, t_tilde: float) -> float:
    """Stationarity residual of the GML objective in z.

    Equals -1/2 times the z-derivative of the squared overlap objective, so its
    zeros are the candidate minimisers.
    """
    if not 0.0 < z < 1.0:
        raise DomainError("z must lie in (0, 1)")
    _check_order(p)
    if not 0.0 < t_tilde <= 1.0:
        raise DomainError("reduced time must lie in (0, 1]")
    stretch = (2.0 * z) ** (-1.0 / p)
    angle = math.pi * t_tilde * stretch
    return (1.0 - 2.0 * z) * (1.0 - math.cos(angle)) - (1.0 - z) * math.pi * t_tilde * stretch * math.sin(
        angle
    ) / p


def _gml_min(p, t_tilde, n_scan, ztol):
    _check_order(p)
    t = _reduced(t_tilde)
    fsq, z = kernels.gml_min_sq(p, t.ravel(), n_scan, ztol)
    return np.sqrt(fsq).reshape(t.shape), z.reshape(t.shape)


def gml_overlap_bound(p: float, t_tilde, n_scan: int = N_SCAN, ztol: float = Z_TOL):
    """O_p(t~): minimum over z of the two-level overlap at reduced time t~.

    Vectorised over ``t_tilde``; scalars in, float out.
    """
    value, _ = _gml_min(p, t_tilde, n_scan, ztol)
    return float(value) if value.ndim == 0 else value


def gml_minimizer(p: float, t_tilde, n_scan: int = N_SCAN, ztol: float = Z_TOL):
    _, z = _gml_min(p, t_tilde, n_scan, ztol)
    return float(z) if z.ndim == 0 else z


def gml_overlap_bound_by_root(p: float, t_tilde: float, n_scan: int = N_SCAN, ztol: float = Z_TOL):
    """O_p through the stationarity equation instead of direct minimisation.

    Scans the residual leftwards from z = 1/2, takes the first sign change
    (the root closest to and below 1/2) and bisects it. Returns
    ``(value, z)``, or ``(nan, nan)`` when no root exists in (0, 1/2).
    """
    _check_order(p)
    t = float(t_tilde)
    if t == 0.0:
        return 1.0, math.nan
    zs = 0.5 * np.arange(1, n_scan + 1) / n_scan
    stretch = (2.0 * zs) ** (-1.0 / p)
    angle = np.pi * t * stretch
    res = (1.0 - 2.0 * zs) * (1.0 - np.cos(angle)) - (1.0 - zs) * angle * np.sin(angle) / p
    if abs(res[-1]) < 1e-14:
        # z = 1/2 itself is stationary (t~ = 1, where sin(pi t~) vanishes)
        return abs(math.cos(0.5 * math.pi * t)), 0.5
    sign = np.sign(res)
    change = np.flatnonzero(sign[:-1] * sign[1:] <= 0)
    if change.size == 0:
        return math.nan, math.nan
    j = change[-1]
    lo, hi = zs[j], zs[j + 1]
    flo = gml_constraint_residual(lo, p, t)
    if flo == 0.0:
        hi = lo
    while hi - lo > ztol:
        mid = 0.5 * (lo + hi)
        fmid = gml_constraint_residual(mid, p, t)
        if (fmid > 0) == (flo > 0):
            lo, flo = mid, fmid
        else:
            hi = mid
    z = 0.5 * (lo + hi)
    c = math.cos(0.5 * math.pi * t * (2.0 * z) ** (-1.0 / p))
    return math.sqrt((1.0 - 2.0 * z) ** 2 + 4.0 * z * (1.0 - z) * c * c), z


def dual_gml_overlap_bound(p: float, t_tilde_dual, n_scan: int = N_SCAN, ztol: float = Z_TOL):
    """Dual GML bound: the same O_p, evaluated at t / tau_p*."""
    return gml_overlap_bound(p, t_tilde_dual, n_scan, ztol)


def quadratic_gml_closed_form(t_tilde):
    """Explicit fit to O_2, accurate to better than 5e-4 on [0, 1]."""
    t = _reduced(t_tilde)
    u = 1.0 - t
    value = np.cos(0.5 * np.pi * (1.0 + 0.162 * u + 0.0743 * u * u) * t ** 0.9521)
    return float(value) if value.ndim == 0 else value


def cos_reference(t_tilde):
    """cos(pi t~ / 2): upper estimate of every O_p, and the MT bound in its own reduced time."""
    t = _reduced(t_tilde)
    value = np.cos(0.5 * np.pi * t)
    return float(value) if value.ndim == 0 else value


def mt_overlap_bound(t, delta_E: float):
    """cos(dE t / hbar), defined for 0 <= t <= pi hbar / (2 dE)."""
    t = np.asarray(t, dtype=float)
    if delta_E < 0:
        raise DomainError("energy spread must be non-negative")
    angle = delta_E * t / HBAR
    if np.any(t < 0) or np.any(angle > 0.5 * math.pi * (1 + 1e-12)):
        raise DomainError("MT bound queried outside 0 <= t <= tau_MT")
    value = np.cos(np.minimum(angle, 0.5 * math.pi))
    return float(value) if value.ndim == 0 else value


def inverse_gml_bound(p: float, sqrt_delta: float, tol: float = T_TOL, n_scan: int = N_SCAN) -> float:
    """Smallest reduced time at which O_p reaches overlap ``sqrt_delta``.

    O_p is non-increasing, so the answer is bracketed by halving from t~ = 1
    and then bisected to relative precision ``tol``. The relative criterion
    matters for small p, where O_p falls steeply and the answer can be far
    below 1e-12.
    """
    _check_order(p)
    if not 0.0 <= sqrt_delta <= 1.0:
        raise DomainError("target overlap must lie in [0, 1]")
    if sqrt_delta == 1.0:
        return 0.0
    hi = 1.0
    lo = 0.5
    while gml_overlap_bound(p, lo, n_scan) <= sqrt_delta:
        hi = lo
        lo *= 0.5
        if lo < 1e-300:
            return hi
    while hi - lo > tol * hi:
        mid = 0.5 * (lo + hi)
        if gml_overlap_bound(p, mid, n_scan) > sqrt_delta:
            lo = mid
        else:
            hi = mid
    return 0.5 * (lo + hi)


# ---------------------------------------------------------------------------
# bounds attached to a spectrum
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class AppliedBound:
    """A bound family bound to a spectrum through its orthogonality time."""

    kind: BoundKind
    tau: float
    delta_E: float | None = None

    def values(self, t, n_scan: int = N_SCAN) -> np.ndarray:
        """Bound at physical times ``t``; 0 outside the validity window [0, tau]."""
        t = np.atleast_1d(np.asarray(t, dtype=float))
        out = np.zeros_like(t)
        inside = t <= self.tau
        if not np.any(inside):
            return out
        if self.kind.family is BoundFamily.MT:
            out[inside] = np.cos(np.minimum(self.delta_E * t[inside] / HBAR, 0.5 * math.pi))
            return out
        if math.isinf(self.tau):
            out[inside] = 1.0
            return out
        reduced = np.minimum(t[inside] / self.tau, 1.0)
        out[inside] = gml_overlap_bound(self.kind.p, reduced, n_scan)
        return out


def applicable_families(spectrum: EnergySpectrum, p_grid: Iterable[float] = DEFAULT_P_GRID, mt: bool = True):
    """MT, one GML per order in ``p_grid`` and, for bounded spectra, one dual GML per order."""
    summary = moments(spectrum)
    fams = []
    if mt:
        tau_mt = math.inf if summary.std == 0 else math.pi * HBAR / (2.0 * summary.std)
        fams.append(AppliedBound(BoundKind(BoundFamily.MT), tau_mt, summary.std))
    w = spectrum.populations
    gaps = spectrum.energies - spectrum.ground_energy
    dual_gaps = None if spectrum.max_energy is None else spectrum.max_energy - spectrum.energies
    for p in p_grid:
        p = float(p)
        _check_order(p)
        log_sum = _log_power_sum(gaps, w, p)
        tau = math.inf if log_sum == -math.inf else _tau_from_log_sum(log_sum, p)
        fams.append(AppliedBound(BoundKind(BoundFamily.GML, p), tau))
        if dual_gaps is not None:
            log_sum = _log_power_sum(dual_gaps, w, p)
            tau = math.inf if log_sum == -math.inf else _tau_from_log_sum(log_sum, p)
            fams.append(AppliedBound(BoundKind(BoundFamily.DUAL_GML, p), tau))
    return fams


def family_values(fam: AppliedBound, t, n_scan: int = N_SCAN) -> np.ndarray:
    return fam.values(t, n_scan)


def bound_curve(fam: AppliedBound, times) -> BoundCurve:
    """Samples of one bound restricted to its validity window."""
    times = np.asarray(times, dtype=float)
    keep = times <= fam.tau
    return BoundCurve(fam.kind, times[keep], fam.values(times[keep]))


def unified_overlap_envelope(
    spectrum: EnergySpectrum,
    t,
    p_grid: Iterable[float] = DEFAULT_P_GRID,
    families: Iterable[BoundFamily] | None = None,
):
    """Pointwise maximum of every bound applicable at ``t`` (0 where none applies).

    ``families`` restricts the maximum, e.g. to ``{BoundFamily.GML}``.
    """
    t_arr = np.atleast_1d(np.asarray(t, dtype=float))
    if np.any(t_arr < 0):
        raise DomainError("time must be non-negative")
    wanted = None if families is None else {BoundFamily(f) for f in families}
    env = np.zeros_like(t_arr)
    for fam in applicable_families(spectrum, p_grid):
        if wanted is not None and fam.kind.family not in wanted:
            continue
        np.maximum(env, fam.values(t_arr), out=env)
    return float(env[0]) if np.ndim(t) == 0 else env


def unified_bound_time(
    spectrum: EnergySpectrum,
    delta: float,
    p_grid: Iterable[float] = DEFAULT_P_GRID,
    tol: float = T_TOL,
) -> float:
    """Largest lower bound on the first time the squared overlap reaches ``delta``.

    Maximises tau_p * gamma_p over the GML orders, the dual orders when the
    spectrum is bounded, and the MT time arccos(sqrt(delta)) / dE.
    """
    if not 0.0 <= delta <= 1.0:
        raise DomainError("delta must lie in [0, 1]")
    if delta == 1.0:
        return 0.0
    target = math.sqrt(delta)
    best = 0.0
    gamma_cache: dict[float, float] = {}
    for fam in applicable_families(spectrum, p_grid):
        if fam.kind.family is BoundFamily.MT:
            if fam.delta_E > 0:
                best = max(best, math.acos(target) * HBAR / fam.delta_E)
            continue
        if math.isinf(fam.tau):
            continue
        p = fam.kind.p
        if p not in gamma_cache:
            gamma_cache[p] = inverse_gml_bound(p, target, tol)
        best = max(best, fam.tau * gamma_cache[p])
    return best


# ---------------------------------------------------------------------------
# two-level tightness machinery
# ---------------------------------------------------------------------------


def two_level_overlap(state: TwoLevelState, t):
    rho = state.rho1
    value = np.sqrt(
        np.maximum(1.0 - 2.0 * rho * (1.0 - rho) * (1.0 - np.cos(state.eps1 * np.asarray(t, float) / HBAR)), 0.0)
    )
    return float(value) if value.ndim == 0 else value


def two_level_first_hit_time(state: TwoLevelState, delta: float) -> float:
    """First time at which the squared two-level overlap equals ``delta``."""
    rho = state.rho1
    if rho in (0.0, 1.0):
        raise DegenerateStateError("an energy eigenstate never leaves overlap 1")
    c = 2.0 * rho * (1.0 - rho)
    floor = 1.0 - 2.0 * c
    if delta < floor - 1e-12 or delta > 1.0:
        raise UnreachableOverlapError(f"squared overlap never reaches {delta!r} (minimum {floor!r})")
    arg = min(max((delta - 1.0 + c) / c, -1.0), 1.0)
    return HBAR / state.eps1 * math.acos(arg)


def tight_p(state: TwoLevelState, t: float) -> float:
    """Order p whose GML bound touches the two-level overlap at time ``t``.

    Uses (1 - cos x) = 2 sin^2(x/2) so the t -> 0 limit stays accurate.
    """
    rho = state.rho1
    if not rho < 0.5:
        raise DomainError("tight order is defined for rho1 < 1/2; use the dual bound otherwise")
    if not 0.0 < t < state.revival_time:
        raise DomainError("t must lie strictly between 0 and the revival time")
    x = state.eps1 * t / HBAR
    return (1.0 - rho) / (1.0 - 2.0 * rho) * x / math.tan(0.5 * x)


def dual_tight_p(state: TwoLevelState, t: float) -> float:
    """Dual-bound counterpart of :func:`tight_p` for rho1 > 1/2 (rho1 -> rho0)."""
    return tight_p(TwoLevelState(1.0 - state.rho1, state.eps1), t)
