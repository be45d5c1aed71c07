"""Single-mode bosonic states in a truncated Fock basis.

Free evolution is under H = hbar nu a^dag a with hbar = 1. Cutoff ``N`` means
the basis |0>, ..., |N>.
"""

from __future__ import annotations

import functools
import math
from dataclasses import dataclass

import numpy as np
from scipy import linalg
from scipy.special import gammaln
from scipy.stats import poisson

from . import kernels
from .errors import CutoffTooSmallError, DimensionMismatchError, QSLError
from .spectra import HBAR, EnergySpectrum

NORM_TOL = 1e-10
TAIL_TOL = 1e-8
OCCUPIED_TOL = 1e-12
MAX_AUTO_CUTOFF = 400

# defaults mirroring the reconstruction cutoffs used experimentally
CUTOFF_FEW_LEVEL = 7
CUTOFF_SQUEEZED = 10
CUTOFF_COHERENT = 20


@dataclass(frozen=True)
class FockState:
    amplitudes: np.ndarray

    def __post_init__(self):
        c = np.atleast_1d(np.asarray(self.amplitudes, dtype=complex)).copy()
        if c.ndim != 1:
            raise ValueError("amplitudes must be a 1-d vector")
        norm = float(np.vdot(c, c).real)
        if abs(norm - 1.0) > NORM_TOL:
            raise QSLError(f"state is not normalised (norm^2 = {norm!r})")
        c.flags.writeable = False
        object.__setattr__(self, "amplitudes", c)

    @classmethod
    def from_unnormalized(cls, amplitudes) -> "FockState":
        c = np.asarray(amplitudes, dtype=complex)
        return cls(c / np.linalg.norm(c))

    @classmethod
    def fock(cls, n: int, cutoff: int) -> "FockState":
        c = np.zeros(cutoff + 1, complex)
        c[n] = 1.0
        return cls(c)

    @property
    def cutoff(self) -> int:
        return self.amplitudes.size - 1

    @property
    def populations(self) -> np.ndarray:
        return np.abs(self.amplitudes) ** 2

    def padded(self, cutoff: int) -> "FockState":
        if cutoff < self.cutoff:
            raise DimensionMismatchError("cannot pad to a smaller cutoff")
        c = np.zeros(cutoff + 1, complex)
        c[: self.amplitudes.size] = self.amplitudes
        return FockState(c)

    def density(self) -> "DensityMatrix":
        return DensityMatrix(np.outer(self.amplitudes, self.amplitudes.conj()))

    def mean_photon_number(self) -> float:
        return float(self.populations @ np.arange(self.amplitudes.size))


@dataclass(frozen=True)
class DensityMatrix:
    entries: np.ndarray

    def __post_init__(self):
        rho = np.asarray(self.entries, dtype=complex).copy()
        if rho.ndim != 2 or rho.shape[0] != rho.shape[1]:
            raise ValueError("density matrix must be square")
        if np.max(np.abs(rho - rho.conj().T)) > 1e-10:
            raise QSLError("density matrix is not Hermitian")
        if abs(np.trace(rho).real - 1.0) > 1e-10:
            raise QSLError("density matrix trace is not 1")
        if np.linalg.eigvalsh(rho).min() < -1e-8:
            raise QSLError("density matrix has a negative eigenvalue")
        rho.flags.writeable = False
        object.__setattr__(self, "entries", rho)

    @property
    def cutoff(self) -> int:
        return self.entries.shape[0] - 1

    def padded(self, cutoff: int) -> "DensityMatrix":
        if cutoff < self.cutoff:
            raise DimensionMismatchError("cannot pad to a smaller cutoff")
        out = np.zeros((cutoff + 1, cutoff + 1), complex)
        d = self.entries.shape[0]
        out[:d, :d] = self.entries
        return DensityMatrix(out)


@dataclass(frozen=True)
class WignerGrid:
    xs: np.ndarray
    ps: np.ndarray
    values: np.ndarray

    @property
    def resolution(self) -> tuple[int, int]:
        return self.values.shape

    def integral(self) -> float:
        """Trapezoid estimate of the integral over dx dp (1 for a normalised state)."""
        return float(np.trapezoid(np.trapezoid(self.values, self.xs, axis=1), self.ps))


def _check_cutoff(cutoff: int):
    if int(cutoff) != cutoff or cutoff < 0:
        raise ValueError("cutoff must be a non-negative integer")


def _coherent_amplitudes(alpha: complex, n: int) -> np.ndarray:
    k = np.arange(n + 1)
    a = abs(alpha)
    if a == 0:
        out = np.zeros(n + 1, complex)
        out[0] = 1.0
        return out
    mag = np.exp(-0.5 * a * a + k * math.log(a) - 0.5 * gammaln(k + 1))
    return mag * np.exp(1j * k * np.angle(alpha))


def coherent_state(alpha: complex, cutoff: int | None = None, tail_tol: float = TAIL_TOL) -> FockState:
    """Truncated coherent state, renormalised after truncation.

    ``cutoff=None`` grows the cutoff until the discarded Poisson tail is below
    ``tail_tol``; an explicit cutoff with a larger tail raises.
    """
    mean = abs(alpha) ** 2
    if cutoff is None:
        cutoff = 0
        while poisson.sf(cutoff, mean) > tail_tol:
            cutoff += 1
            if cutoff > MAX_AUTO_CUTOFF:
                raise CutoffTooSmallError("coherent amplitude too large for automatic cutoff")
    _check_cutoff(cutoff)
    tail = poisson.sf(cutoff, mean)
    if tail > tail_tol:
        raise CutoffTooSmallError(f"cutoff {cutoff} discards population {tail:.3g} > {tail_tol:g}")
    return FockState.from_unnormalized(_coherent_amplitudes(alpha, cutoff))


def _squeezed_vacuum_amplitudes(zeta: complex, n: int) -> np.ndarray:
    """S(zeta)|0> with S(zeta) = exp[(zeta^* a^2 - zeta a^dag^2) / 2]."""
    r, phi = abs(zeta), np.angle(zeta)
    out = np.zeros(n + 1, complex)
    m = np.arange(n // 2 + 1)
    if r == 0:
        out[0] = 1.0
        return out
    logmag = 0.5 * gammaln(2 * m + 1) - m * math.log(2.0) - gammaln(m + 1) + m * math.log(math.tanh(r))
    out[2 * m] = np.exp(logmag) * np.exp(1j * m * (phi + math.pi)) / math.sqrt(math.cosh(r))
    return out


def squeezed_coherent_state(
    zeta: complex,
    alpha: complex = 0.0,
    cutoff: int | None = None,
    tail_tol: float = TAIL_TOL,
) -> FockState:
    """D(alpha) S(zeta) |0>: squeeze first, then displace.

    Built on a working basis well above ``cutoff`` and truncated back; the
    population left above the cutoff is the truncation tail.
    """
    def build(n):
        work = n + 40 + int(4 * abs(alpha) ** 2 + 8 * abs(alpha))
        vec = _squeezed_vacuum_amplitudes(zeta, work + 40)[: work + 1]
        if alpha != 0:
            vec = displacement_matrix(alpha, work) @ vec
        vec = vec / np.linalg.norm(vec)
        return vec[: n + 1], float(np.sum(np.abs(vec[n + 1:]) ** 2))

    if cutoff is None:
        cutoff = 0
        while True:
            vec, tail = build(cutoff)
            if tail <= tail_tol:
                break
            cutoff += 1
            if cutoff > MAX_AUTO_CUTOFF:
                raise CutoffTooSmallError("state too large for automatic cutoff")
    else:
        _check_cutoff(cutoff)
        vec, tail = build(cutoff)
        if tail > tail_tol:
            raise CutoffTooSmallError(f"cutoff {cutoff} discards population {tail:.3g} > {tail_tol:g}")
    return FockState.from_unnormalized(vec)


def squeezed_vacuum(zeta: complex, cutoff: int | None = None, tail_tol: float = TAIL_TOL) -> FockState:
    return squeezed_coherent_state(zeta, 0.0, cutoff, tail_tol)


def evolve_free(state: FockState, nu: float, t: float) -> FockState:
    n = np.arange(state.amplitudes.size)
    return FockState(state.amplitudes * np.exp(-1j * n * nu * t))


def overlap(a: FockState, b: FockState) -> float:
    if a.amplitudes.shape != b.amplitudes.shape:
        raise DimensionMismatchError(f"cutoffs differ: {a.cutoff} vs {b.cutoff}")
    return min(abs(np.vdot(a.amplitudes, b.amplitudes)), 1.0)


def overlap_curve(state: FockState, nu: float, times) -> np.ndarray:
    """|<psi(0)|psi(t)>| for every t, without building intermediate states."""
    n = np.arange(state.amplitudes.size)
    phases = np.exp(-1j * np.multiply.outer(np.asarray(times, float), n) * nu)
    return np.minimum(np.abs(phases @ state.populations), 1.0)


def density_overlap(rho0: DensityMatrix, rho_t: DensityMatrix) -> float:
    """sqrt(Tr(rho0 rho_t)), clamped to [0, 1]."""
    if rho0.entries.shape != rho_t.entries.shape:
        raise DimensionMismatchError(f"cutoffs differ: {rho0.cutoff} vs {rho_t.cutoff}")
    tr = float(np.real(np.sum(rho0.entries * rho_t.entries.T)))
    return math.sqrt(min(max(tr, 0.0), 1.0))


def _displacement_padding(alpha: complex, cutoff: int) -> int:
    # an occupied level n spreads over roughly |alpha|^2 + 2|alpha| sqrt(n) levels
    a = abs(alpha)
    return 10 + int(math.ceil(a * a + 6.0 * a * math.sqrt(cutoff + 1) + 6.0 * a))


@functools.lru_cache(maxsize=32)
def _position_eigensystem(dim: int):
    """Eigen-decomposition of the truncated a + a^dag (real symmetric tridiagonal)."""
    off = np.sqrt(np.arange(1, dim))
    w, v = linalg.eigh_tridiagonal(np.zeros(dim), off)
    w.flags.writeable = False
    v.flags.writeable = False
    return w, v


def displacement_matrix(alpha: complex, cutoff: int, pad: int | None = None, rows: int | None = None) -> np.ndarray:
    """Block of D(alpha) = exp(alpha a^dag - alpha^* a) on the truncated basis.

    The generator is exponentiated on a basis enlarged by ``pad`` levels and
    the top-left ``(rows + 1) x (cutoff + 1)`` block is returned
    (``rows`` defaults to ``cutoff``). With alpha = |alpha| e^(i phi) and
    S = diag(i^n), the truncated generator equals
    R S exp(-i |alpha| (a + a^dag)) S^dag R^dag with R = diag(e^(i n phi)),
    so one cached real tridiagonal eigensystem serves every alpha.
    """
    _check_cutoff(cutoff)
    rows = cutoff if rows is None else rows
    if pad is None:
        pad = _displacement_padding(alpha, max(cutoff, rows))
    dim = max(cutoff, rows) + pad + 1
    w, v = _position_eigensystem(dim)
    n_row = np.arange(rows + 1)
    n_col = np.arange(cutoff + 1)
    core = (v[: rows + 1] * np.exp(-1j * abs(alpha) * w)) @ v[: cutoff + 1].T
    phi = np.angle(alpha) if alpha != 0 else 0.0
    left = (1j ** (n_row % 4)) * np.exp(1j * n_row * phi)
    right = ((-1j) ** (n_col % 4)) * np.exp(-1j * n_col * phi)
    return left[:, None] * core * right[None, :]


def wigner(rho: DensityMatrix, xs=None, ps=None, resolution: int = 101, n_sd: float = 6.0) -> WignerGrid:
    """W(alpha) = (2/pi) Tr[D(-alpha) rho D(alpha) Pi] with alpha = x + i p.

    With this convention the integral over dx dp is 1. Without explicit axes
    the grid is centred on <a> and spans ``n_sd`` quadrature standard
    deviations (at least the vacuum width) in each direction.
    """
    if xs is None or ps is None:
        (xc, xw), (pc, pw) = _quadrature_extent(rho.entries, n_sd)
        xs = np.linspace(xc - xw, xc + xw, resolution) if xs is None else xs
        ps = np.linspace(pc - pw, pc + pw, resolution) if ps is None else ps
    xs, ps = np.asarray(xs, float), np.asarray(ps, float)
    return WignerGrid(xs, ps, kernels.wigner_grid(rho.entries, xs, ps))


def _quadrature_extent(rho: np.ndarray, n_sd: float):
    dim = rho.shape[0]
    a = np.diag(np.sqrt(np.arange(1, dim)), 1)
    x_op = 0.5 * (a + a.T)
    p_op = -0.5j * (a - a.T)
    out = []
    for op in (x_op, p_op):
        mean = float(np.real(np.trace(rho @ op)))
        var = float(np.real(np.trace(rho @ op @ op))) - mean * mean
        sd = max(math.sqrt(max(var, 0.0)), 0.5)
        out.append((mean, n_sd * sd))
    return out


def spectrum_of_state(state: FockState, nu: float, bounded: bool = True) -> EnergySpectrum:
    """Energy spectrum e_n = n hbar nu of a Fock-basis state.

    Levels with population at or below 1e-12 are dropped; ``max_energy`` is the
    highest remaining level, or ``None`` when ``bounded`` is False (e.g. for
    coherent states, whose ideal spectrum is unbounded).
    """
    pops = state.populations
    occupied = np.flatnonzero(pops > OCCUPIED_TOL)
    weights = pops[occupied] / pops[occupied].sum()
    energies = HBAR * nu * occupied.astype(float)
    emax = float(energies.max()) if bounded else None
    return EnergySpectrum(energies, weights, ground_energy=0.0, max_energy=emax)
