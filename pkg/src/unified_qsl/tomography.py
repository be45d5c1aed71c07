"""Simulated resonator tomography through an ancilla qubit.

Measurement chain: displace the resonator by D(alpha), swap with a resonant
qubit for durations tau, read P_e(tau), fit the photon-number populations of
D(alpha) rho D(alpha)^dag, and invert the collection of displaced populations
for the full density matrix.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from .errors import (
    DimensionMismatchError,
    InsufficientDataError,
    InvalidPopulationsError,
    UnderdeterminedError,
)
from .fock import DensityMatrix, FockState, displacement_matrix

RECORD_SCHEMA = "unified-qsl/tomography-records/1"
POP_TOL = 1e-9
RIDGE = 1e-10
TRACE_TAIL = 1e-10


@dataclass(frozen=True)
class SwapSignal:
    taus: np.ndarray
    pe: np.ndarray
    omega: float
    noise_sigma: float = 0.0

    def __post_init__(self):
        taus = np.asarray(self.taus, dtype=float)
        pe = np.asarray(self.pe, dtype=float)
        if taus.shape != pe.shape or taus.ndim != 1:
            raise ValueError("taus and pe must be matching 1-d arrays")
        if np.any(np.diff(taus) <= 0):
            raise ValueError("swap durations must be strictly increasing")
        object.__setattr__(self, "taus", taus)
        object.__setattr__(self, "pe", np.clip(pe, 0.0, 1.0))


@dataclass(frozen=True)
class DisplacedRecord:
    alpha: complex
    diagonals: np.ndarray

    def __post_init__(self):
        d = np.asarray(self.diagonals, dtype=float)
        if d.ndim != 1 or d.size == 0:
            raise ValueError("diagonals must be a non-empty vector")
        if d.sum() > 1.0 + 1e-6 or np.any(d < -1e-6):
            raise InvalidPopulationsError("displaced populations out of range")
        object.__setattr__(self, "diagonals", d)
        object.__setattr__(self, "alpha", complex(self.alpha))


def swap_basis(taus, omega: float, n_levels: int) -> np.ndarray:
    """Column n holds P_e^n(tau) = (1 - cos(2 sqrt(n) omega tau)) / 2, n = 0..n_levels."""
    taus = np.asarray(taus, dtype=float)
    n = np.arange(n_levels + 1)
    return 0.5 * (1.0 - np.cos(2.0 * np.sqrt(n)[None, :] * omega * taus[:, None]))


def simulate_swap_signal(
    diag,
    omega: float,
    taus,
    noise_sigma: float = 0.0,
    seed: int | None = None,
    shots: int | None = None,
    rng: np.random.Generator | None = None,
) -> SwapSignal:
    """Qubit excitation probability after resonant swaps of duration ``taus``.

    Optional readout noise: additive Gaussian of width ``noise_sigma`` and/or
    binomial sampling with ``shots`` repetitions per duration.
    """
    diag = np.asarray(diag, dtype=float)
    if diag.ndim != 1 or np.any(diag < -POP_TOL) or diag.sum() > 1.0 + POP_TOL:
        raise InvalidPopulationsError("populations must be non-negative and sum to at most 1")
    pe = swap_basis(taus, omega, diag.size - 1) @ np.clip(diag, 0.0, None)
    if noise_sigma > 0 or shots:
        rng = np.random.default_rng(seed) if rng is None else rng
        if shots:
            pe = rng.binomial(int(shots), np.clip(pe, 0.0, 1.0)) / shots
        if noise_sigma > 0:
            pe = pe + rng.normal(0.0, noise_sigma, size=pe.shape)
    return SwapSignal(taus, pe, omega, noise_sigma)


def fit_diagonals(signal: SwapSignal, n_levels: int) -> np.ndarray:
    """Least-squares populations rho_00 .. rho_NN (N = ``n_levels``) from a swap signal.

    rho_00 never excites the qubit, so it is fixed by the trace. The raw
    solution is clipped to [0, 1] and renormalised.
    """
    if signal.taus.size < n_levels + 1:
        raise UnderdeterminedError(f"{signal.taus.size} samples cannot fix {n_levels + 1} populations")
    basis = swap_basis(signal.taus, signal.omega, n_levels)[:, 1:]
    if n_levels == 0:
        return np.ones(1)
    if np.linalg.matrix_rank(basis) < n_levels:
        raise UnderdeterminedError("swap durations do not separate the photon-number frequencies")
    excited, *_ = np.linalg.lstsq(basis, signal.pe, rcond=None)
    pops = np.concatenate([[1.0 - excited.sum()], excited])
    pops = np.clip(pops, 0.0, 1.0)
    total = pops.sum()
    if total == 0:
        pops[0], total = 1.0, 1.0
    return pops / total


def displaced_diagonals(rho: DensityMatrix, alpha: complex, n_out: int | None = None) -> DisplacedRecord:
    """Photon-number populations of D(alpha) rho D(alpha)^dag.

    ``n_out`` is the highest level reported; by default the record extends
    until the population left above it is below 1e-10.
    """
    cutoff = rho.cutoff
    if n_out is None:
        rows = cutoff + 10 + int(math.ceil(abs(alpha) ** 2 + 6 * abs(alpha) * math.sqrt(cutoff + 1)))
    else:
        rows = n_out
    d = displacement_matrix(alpha, cutoff, rows=rows)
    diag = np.real(np.einsum("ni,ij,nj->n", d, rho.entries, d.conj()))
    if n_out is None:
        tail = np.cumsum(diag[::-1])[::-1]
        keep = np.flatnonzero(tail > TRACE_TAIL)
        last = max(cutoff, int(keep[-1]) if keep.size else 0)
        diag = diag[: last + 1]
    return DisplacedRecord(alpha, np.clip(diag, 0.0, None))


def default_displacements(mean_photons: float, n_prime: int, min_amplitude: float = 0.5) -> np.ndarray:
    """Two rings, at A and 2A with A = max(sqrt(<n>), min_amplitude), 4(N'+1) phases each."""
    amp = max(math.sqrt(max(mean_photons, 0.0)), min_amplitude)
    n_phase = 4 * (n_prime + 1)
    phases = np.exp(2j * np.pi * np.arange(n_phase) / n_phase)
    return np.concatenate([amp * phases, 2.0 * amp * phases])


def _design(records: Sequence[DisplacedRecord], n_prime: int):
    """Real linear model y = A x + b for a unit-trace Hermitian matrix.

    Parameters: diagonals rho_00 .. rho_{N'-1,N'-1} (the last is fixed by the
    trace), then Re rho_ij and Im rho_ij for i < j.
    """
    dim = n_prime + 1
    iu, ju = np.triu_indices(dim, 1)
    blocks, rhs = [], []
    for rec in records:
        rows = rec.diagonals.size - 1
        d = displacement_matrix(rec.alpha, n_prime, rows=rows)
        m_diag = np.abs(d) ** 2  # M^(n)_ii
        cross = d[:, iu] * d[:, ju].conj()  # M^(n)_ij, i < j
        a = np.hstack(
            [
                m_diag[:, :-1] - m_diag[:, -1:],
                2.0 * cross.real,
                -2.0 * cross.imag,
            ]
        )
        blocks.append(a)
        rhs.append(rec.diagonals - m_diag[:, -1])
    return np.vstack(blocks), np.concatenate(rhs), (iu, ju)


def reconstruct_density(
    records: Sequence[DisplacedRecord],
    n_prime: int,
    ridge: float = RIDGE,
    rank_rtol: float = 1e-10,
) -> DensityMatrix:
    """Least-squares density matrix on levels 0..N' from displaced populations.

    A small ridge term regularises the normal equations; the estimate is then
    projected onto the PSD cone by clipping negative eigenvalues and
    renormalising the trace.
    """
    if not records:
        raise InsufficientDataError("no displaced records supplied")
    a, b, (iu, ju) = _design(records, n_prime)
    n_par = a.shape[1]
    sv = np.linalg.svd(a, compute_uv=False)
    rank = int(np.sum(sv > rank_rtol * sv[0])) if sv.size else 0
    if a.shape[0] < n_par or rank < n_par:
        raise InsufficientDataError(
            f"records determine {rank} of {n_par} real parameters; add displacement amplitudes or phases"
        )
    x = np.linalg.solve(a.T @ a + ridge * np.eye(n_par), a.T @ b)

    dim = n_prime + 1
    n_off = iu.size
    rho = np.zeros((dim, dim), complex)
    diag = x[: dim - 1]
    rho[np.arange(dim - 1), np.arange(dim - 1)] = diag
    rho[dim - 1, dim - 1] = 1.0 - diag.sum()
    off = x[dim - 1: dim - 1 + n_off] + 1j * x[dim - 1 + n_off:]
    rho[iu, ju] = off
    rho[ju, iu] = off.conj()
    return DensityMatrix(project_psd(rho))


def project_psd(rho: np.ndarray) -> np.ndarray:
    """Clip negative eigenvalues of a Hermitian matrix and rescale to unit trace."""
    herm = 0.5 * (rho + rho.conj().T)
    w, v = np.linalg.eigh(herm)
    w = np.clip(w, 0.0, None)
    if w.sum() == 0:
        raise InsufficientDataError("reconstruction has no positive spectrum")
    w = w / w.sum()
    out = (v * w) @ v.conj().T
    return 0.5 * (out + out.conj().T)


def fidelity(rho: DensityMatrix, target: FockState) -> float:
    """<psi|rho|psi>; the smaller of the two is zero-padded to the common cutoff."""
    psi = target.amplitudes
    mat = rho.entries
    dim = max(psi.size, mat.shape[0])
    if psi.size < dim:
        psi = np.concatenate([psi, np.zeros(dim - psi.size)])
    if mat.shape[0] < dim:
        mat = DensityMatrix(mat).padded(dim - 1).entries
    if mat.shape != (dim, dim):
        raise DimensionMismatchError("incompatible density matrix")
    return float(min(max(np.real(np.vdot(psi, mat @ psi)), 0.0), 1.0))


@dataclass
class RecordSet:
    """Serializable bundle of displaced records and the swap data behind them."""

    omega: float
    n_prime: int
    alphas: list[complex]
    diagonals: list[np.ndarray]
    taus: np.ndarray = field(default_factory=lambda: np.zeros(0))
    pe: list[np.ndarray] = field(default_factory=list)

    def records(self) -> list[DisplacedRecord]:
        return [DisplacedRecord(a, d) for a, d in zip(self.alphas, self.diagonals)]

    def to_dict(self) -> dict:
        return {
            "schema": RECORD_SCHEMA,
            "omega": float(self.omega),
            "n_prime": int(self.n_prime),
            "taus": [float(t) for t in self.taus],
            "pe": [[float(v) for v in row] for row in self.pe],
            "alphas": [[float(a.real), float(a.imag)] for a in self.alphas],
            "diagonals": [[float(v) for v in row] for row in self.diagonals],
        }

    @classmethod
    def from_dict(cls, doc: dict) -> "RecordSet":
        if doc.get("schema", RECORD_SCHEMA) != RECORD_SCHEMA:
            raise ValueError(f"unsupported record schema {doc.get('schema')!r}")
        alphas = [complex(*a) if isinstance(a, (list, tuple)) else complex(a) for a in doc["alphas"]]
        return cls(
            omega=float(doc["omega"]),
            n_prime=int(doc.get("n_prime", len(doc["diagonals"][0]) - 1)),
            alphas=alphas,
            diagonals=[np.asarray(d, float) for d in doc["diagonals"]],
            taus=np.asarray(doc.get("taus", []), float),
            pe=[np.asarray(p, float) for p in doc.get("pe", [])],
        )

    def dumps(self) -> str:
        return json.dumps(self.to_dict(), indent=1, sort_keys=True)

    @classmethod
    def loads(cls, text: str) -> "RecordSet":
        return cls.from_dict(json.loads(text))


def default_swap_durations(omega: float, n_levels: int, periods: int = 8) -> np.ndarray:
    """8 (n_levels + 1) evenly spaced durations covering ``periods`` single-photon swap periods.

    The slowest oscillation (n = 1) has period pi / omega, so the window
    resolves every sqrt(n)-scaled frequency up to ``n_levels``.
    """
    n_samples = 8 * (n_levels + 1)
    return np.linspace(0.0, periods * math.pi / omega, n_samples + 1)[1:]


def measure_records(
    rho: DensityMatrix,
    alphas,
    omega: float,
    taus=None,
    fit_levels: int | None = None,
    noise_sigma: float = 0.0,
    shots: int | None = None,
    seed: int | None = None,
    n_prime: int | None = None,
) -> RecordSet:
    """Run the full simulated chain: displace, swap, fit populations.

    ``fit_levels`` is the highest photon number fitted per swap signal; by
    default each record is fitted up to the level where its displaced
    population becomes negligible, so nothing leaks out of the model.
    ``taus=None`` picks durations suited to the longest record. One generator
    seeded by ``seed`` drives all noise draws. ``n_prime`` (default: the
    cutoff of ``rho``) is the reconstruction cutoff stored with the records.
    """
    n_prime = rho.cutoff if n_prime is None else n_prime
    rng = np.random.default_rng(seed)
    truths = [displaced_diagonals(rho, a).diagonals for a in alphas]
    longest = max(t.size for t in truths) - 1
    if taus is None:
        taus = default_swap_durations(omega, longest if fit_levels is None else fit_levels)
    taus = np.asarray(taus, float)
    diags, pes = [], []
    for true in truths:
        sig = simulate_swap_signal(true, omega, taus, noise_sigma, shots=shots, rng=rng)
        pes.append(sig.pe)
        diags.append(fit_diagonals(sig, true.size - 1 if fit_levels is None else fit_levels))
    return RecordSet(omega, n_prime, [complex(a) for a in alphas], diags, taus, pes)


def exact_records(rho: DensityMatrix, alphas, n_out: int | None = None) -> list[DisplacedRecord]:
    """Noise-free displaced records straight from the forward model."""
    return [displaced_diagonals(rho, a, n_out) for a in alphas]
