import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st
from scipy.stats import poisson

from unified_qsl import fock as F
from unified_qsl import tomography as T
from unified_qsl.errors import (
    InsufficientDataError,
    InvalidPopulationsError,
    UnderdeterminedError,
)

OMEGA = 2 * math.pi * 13.5e6
NU = 2 * math.pi * 4e6


def random_density(rng, dim, rank=None):
    rank = dim if rank is None else rank
    g = rng.normal(size=(dim, rank)) + 1j * rng.normal(size=(dim, rank))
    rho = g @ g.conj().T
    return F.DensityMatrix(rho / np.trace(rho).real)


def rings(amp, n_phase):
    ph = np.exp(2j * np.pi * np.arange(n_phase) / n_phase)
    return np.concatenate([amp * ph, 2 * amp * ph])


# --- swap signal -------------------------------------------------------------


def test_vacuum_never_excites():
    sig = T.simulate_swap_signal([1.0, 0.0, 0.0], OMEGA, np.linspace(1e-9, 1e-6, 50))
    assert np.all(sig.pe == 0.0)


def test_single_photon_full_swap():
    sig = T.simulate_swap_signal([0.0, 1.0], OMEGA, [math.pi / (2 * OMEGA)])
    assert sig.pe[0] == pytest.approx(1.0, abs=1e-15)


def test_half_half_signal():
    taus = np.linspace(1e-9, 2e-7, 40)
    sig = T.simulate_swap_signal([0.5, 0.5], OMEGA, taus)
    assert np.allclose(sig.pe, 0.25 * (1 - np.cos(2 * OMEGA * taus)), atol=1e-15)


def test_general_signal_is_weighted_rabi_sum():
    diag = np.array([0.1, 0.2, 0.3, 0.4])
    taus = np.linspace(1e-9, 3e-7, 25)
    sig = T.simulate_swap_signal(diag, OMEGA, taus)
    ref = sum(diag[n] * 0.5 * (1 - np.cos(2 * math.sqrt(n) * OMEGA * taus)) for n in range(4))
    assert np.allclose(sig.pe, ref, atol=1e-15)


def test_signal_noise_is_seeded():
    taus = np.linspace(1e-9, 3e-7, 25)
    a = T.simulate_swap_signal([0.5, 0.5], OMEGA, taus, 0.05, seed=4)
    b = T.simulate_swap_signal([0.5, 0.5], OMEGA, taus, 0.05, seed=4)
    c = T.simulate_swap_signal([0.5, 0.5], OMEGA, taus, 0.05, seed=5)
    assert np.array_equal(a.pe, b.pe)
    assert not np.array_equal(a.pe, c.pe)
    assert np.all((a.pe >= 0) & (a.pe <= 1))


def test_signal_shot_noise():
    taus = np.linspace(1e-9, 3e-7, 25)
    sig = T.simulate_swap_signal([0.5, 0.5], OMEGA, taus, shots=100, seed=1)
    assert np.allclose(sig.pe * 100, np.round(sig.pe * 100))


def test_invalid_populations():
    with pytest.raises(InvalidPopulationsError):
        T.simulate_swap_signal([0.7, 0.7], OMEGA, [1e-8])
    with pytest.raises(InvalidPopulationsError):
        T.simulate_swap_signal([1.1, -0.1], OMEGA, [1e-8])


def test_taus_must_increase():
    with pytest.raises(ValueError):
        T.SwapSignal(np.array([2.0, 1.0]), np.array([0.1, 0.2]), OMEGA)


# --- population fit ----------------------------------------------------------


def test_fit_two_level_round_trip():
    taus = np.linspace(0, math.pi / OMEGA, 51)[1:]
    sig = T.simulate_swap_signal([0.8, 0.2], OMEGA, taus)
    assert np.allclose(T.fit_diagonals(sig, 1), [0.8, 0.2], atol=1e-8)


def test_fit_zero_signal_is_vacuum():
    taus = np.linspace(1e-9, 1e-6, 30)
    sig = T.SwapSignal(taus, np.zeros(30), OMEGA)
    assert np.allclose(T.fit_diagonals(sig, 4), np.eye(5)[0])


@given(st.lists(st.floats(0.0, 1.0), min_size=2, max_size=9))
def test_fit_exact_on_noiseless_signals(w):
    w = np.array(w)
    if w.sum() < 1e-3:
        return
    diag = w / w.sum()
    n = diag.size - 1
    # twice the parameter count, spanning a full period of the slowest oscillation
    taus = T.default_swap_durations(OMEGA, n)
    assert taus.size >= 2 * (n + 1) and taus[-1] >= math.pi / OMEGA
    est = T.fit_diagonals(T.simulate_swap_signal(diag, OMEGA, taus), n)
    assert np.allclose(est, diag, atol=1e-8)


def test_fit_noise_monte_carlo():
    diag = np.array([0.5, 0.3, 0.15, 0.05])
    taus = np.linspace(0, 4 * math.pi / OMEGA, 201)[1:]
    worst = 0.0
    for seed in range(100):
        sig = T.simulate_swap_signal(diag, OMEGA, taus, noise_sigma=0.01, seed=seed)
        worst = max(worst, np.max(np.abs(T.fit_diagonals(sig, 3) - diag)))
    assert worst < 0.02


def test_fit_underdetermined():
    sig = T.SwapSignal(np.array([1e-8, 2e-8]), np.array([0.1, 0.2]), OMEGA)
    with pytest.raises(UnderdeterminedError):
        T.fit_diagonals(sig, 4)


def test_fit_degenerate_durations():
    # durations at multiples of the single-photon period cannot see n = 1
    taus = np.arange(1, 20) * math.pi / OMEGA
    sig = T.simulate_swap_signal([0.5, 0.5, 0.0, 0.0], OMEGA, taus)
    with pytest.raises(UnderdeterminedError):
        T.fit_diagonals(sig, 1)


# --- displaced populations ------------------------------------------------------


def test_zero_displacement_is_diagonal():
    rho = random_density(np.random.default_rng(0), 5)
    rec = T.displaced_diagonals(rho, 0.0)
    assert np.allclose(rec.diagonals[:5], np.real(np.diag(rho.entries)), atol=1e-13)


@pytest.mark.parametrize("alpha", [0.3, 1.0j, 1.5 - 0.5j, 2.5])
def test_displaced_vacuum_is_poisson(alpha):
    rec = T.displaced_diagonals(F.FockState.fock(0, 3).density(), alpha)
    n = np.arange(rec.diagonals.size)
    assert np.allclose(rec.diagonals, poisson.pmf(n, abs(alpha) ** 2), atol=1e-10)


@given(st.floats(0.0, 3.0), st.floats(0.0, 2 * math.pi), st.integers(0, 2**31))
def test_displaced_trace_preserved(amp, phi, seed):
    rho = random_density(np.random.default_rng(seed), 6)
    rec = T.displaced_diagonals(rho, amp * np.exp(1j * phi))
    assert abs(rec.diagonals.sum() - 1.0) < 1e-6
    assert np.all(rec.diagonals >= 0)


def test_displaced_matches_operator_sandwich():
    from scipy.linalg import expm

    rho = random_density(np.random.default_rng(1), 4)
    alpha = 0.8 - 0.6j
    dim = 80
    a = np.diag(np.sqrt(np.arange(1, dim)), 1)
    d = expm(alpha * a.T - np.conj(alpha) * a)
    big = rho.padded(dim - 1).entries
    ref = np.real(np.diag(d @ big @ d.conj().T))[:15]
    assert np.allclose(T.displaced_diagonals(rho, alpha, n_out=14).diagonals, ref, atol=1e-10)


def test_record_validation():
    with pytest.raises(InvalidPopulationsError):
        T.DisplacedRecord(0.0, np.array([0.8, 0.5]))


# --- reconstruction ---------------------------------------------------------------


def test_identity_displacement_is_insufficient():
    rho = F.DensityMatrix(np.diag([0.6, 0.3, 0.1]))
    with pytest.raises(InsufficientDataError):
        T.reconstruct_density(T.exact_records(rho, [0.0]), 2)


def test_no_records_insufficient():
    with pytest.raises(InsufficientDataError):
        T.reconstruct_density([], 2)


def test_two_level_twelve_displacements():
    target = F.FockState.from_unnormalized([2, 1, 0, 0, 0, 0])
    alphas = np.exp(2j * np.pi * np.arange(12) / 12)
    rho = T.reconstruct_density(T.exact_records(target.density(), alphas), 5)
    assert T.fidelity(rho, target) > 0.999


def test_squeezed_reconstruction():
    target = F.squeezed_coherent_state(0.25 * np.exp(1.5j * math.pi), 0.0)
    n_prime = 10
    rho0 = target.padded(max(n_prime, target.cutoff)).density()
    alphas = T.default_displacements(target.mean_photon_number(), n_prime)
    rho = T.reconstruct_density(T.exact_records(rho0, alphas), n_prime)
    assert T.fidelity(rho, target) > 0.99


@pytest.mark.parametrize("seed", range(6))
def test_random_density_round_trip(seed):
    rng = np.random.default_rng(100 + seed)
    dim = int(rng.integers(2, 9))
    n_prime = dim - 1
    rho = random_density(rng, dim, rank=int(rng.integers(1, dim + 1)))
    n_phase = (n_prime + 1) ** 2  # two rings: 2 (N'+1)^2 records
    recs = T.exact_records(rho, rings(1.0, n_phase))
    est = T.reconstruct_density(recs, n_prime)
    # fidelity against the dominant eigenvector and full-matrix agreement
    w, v = np.linalg.eigh(rho.entries)
    psi = F.FockState(v[:, -1])
    assert T.fidelity(est, psi) == pytest.approx(w[-1], abs=1e-3)
    assert np.max(np.abs(est.entries - rho.entries)) < 1e-3
    if w[-2] < 1e-9:
        assert T.fidelity(est, psi) > 0.999


def test_reconstruction_via_swap_chain():
    target = F.FockState.from_unnormalized([math.sqrt(7), math.sqrt(40), math.sqrt(115)])
    n_prime = 7
    rho0 = target.padded(n_prime).density()
    alphas = T.default_displacements(target.mean_photon_number(), n_prime)
    recs = T.measure_records(rho0, alphas, OMEGA)
    assert T.fidelity(T.reconstruct_density(recs.records(), n_prime), target) > 0.999


def test_project_psd():
    m = np.array([[1.2, 0.0], [0.0, -0.2]], complex)
    out = T.project_psd(m)
    assert np.allclose(out, np.diag([1.0, 0.0]))
    with pytest.raises(InsufficientDataError):
        T.project_psd(-np.eye(2))


# --- fidelity -------------------------------------------------------------------


def test_fidelity_trivial():
    psi = F.FockState.from_unnormalized([1, 1j, 0.5])
    assert T.fidelity(psi.density(), psi) == pytest.approx(1.0, abs=1e-12)
    assert T.fidelity(F.FockState.fock(2, 2).density(), F.FockState.fock(0, 2)) == 0.0
    mixed = F.DensityMatrix(np.eye(8) / 8)
    assert T.fidelity(mixed, psi) == pytest.approx(1 / 8, abs=1e-12)


def test_fidelity_pads_target():
    psi = F.FockState.from_unnormalized([2, 1])
    assert T.fidelity(psi.padded(7).density(), psi) == pytest.approx(1.0, abs=1e-12)


def test_fidelity_pads_density():
    psi = F.FockState.from_unnormalized([2, 1, 0, 0])
    rho = F.FockState.from_unnormalized([2, 1]).density()
    assert T.fidelity(rho, psi) == pytest.approx(1.0, abs=1e-12)


def test_fidelity_target_beyond_cutoff():
    # weight of the target above the reconstruction cutoff counts as missing
    psi = F.FockState.from_unnormalized([1, 0, 0, 1])
    rho = F.FockState.fock(0, 1).density()
    assert T.fidelity(rho, psi) == pytest.approx(0.5, abs=1e-12)


# --- record sets ------------------------------------------------------------------


def test_record_set_round_trip():
    rho = F.FockState.from_unnormalized([2, 1, 0]).density()
    rs = T.measure_records(rho, [0.5, 0.5j, -0.5 + 0.1j], OMEGA, noise_sigma=0.01, seed=2)
    doc = rs.to_dict()
    assert {"omega", "taus", "pe", "alphas", "diagonals"} <= set(doc)
    back = T.RecordSet.loads(rs.dumps())
    assert back.alphas == rs.alphas
    assert np.array_equal(back.taus, rs.taus)
    for a, b in zip(back.diagonals, rs.diagonals):
        assert np.array_equal(a, b)
    for a, b in zip(back.pe, rs.pe):
        assert np.array_equal(a, b)


def test_record_set_rejects_foreign_schema():
    with pytest.raises(ValueError):
        T.RecordSet.from_dict({"schema": "other/1", "omega": 1.0, "alphas": [], "diagonals": [[1.0]]})


def test_measure_records_seeded():
    rho = F.FockState.from_unnormalized([2, 1, 0]).density()
    a = T.measure_records(rho, [0.5, 1.0j], OMEGA, noise_sigma=0.02, seed=9)
    b = T.measure_records(rho, [0.5, 1.0j], OMEGA, noise_sigma=0.02, seed=9)
    assert a.dumps() == b.dumps()


# --- end to end ---------------------------------------------------------------------


@pytest.mark.parametrize(
    "amps",
    [[2, 1], [math.sqrt(7), 1, 1], [math.sqrt(2), math.sqrt(5), math.sqrt(2)]],
)
def test_evolution_through_tomography(amps):
    target = F.FockState.from_unnormalized(amps)
    n_prime = 7
    psi0 = target.padded(n_prime)
    alphas = T.default_displacements(psi0.mean_photon_number(), n_prime)
    times = np.linspace(0, 2 * math.pi / NU, 9)

    def measured(psi):
        recs = T.measure_records(psi.density(), alphas, OMEGA)
        return T.reconstruct_density(recs.records(), n_prime)

    rho0 = measured(psi0)
    loop = np.array([F.density_overlap(rho0, measured(F.evolve_free(psi0, NU, t))) for t in times])
    direct = F.overlap_curve(psi0, NU, times)
    assert np.max(np.abs(loop - direct)) < 5e-3
