import math

import mpmath
import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from unified_qsl import bounds as B
from unified_qsl.errors import DegenerateStateError, DomainError, UnreachableOverlapError
from unified_qsl.spectra import EnergySpectrum, moments

orders = st.floats(min_value=0.1, max_value=10.0)
reduced = st.floats(min_value=0.0, max_value=1.0)


def brute_force(p, t, n=10**6):
    z = np.linspace(0.0, 1.0, n + 1)[1:-1]
    f = 1 - 2 * z * (1 - z) * (1 - np.cos(np.pi * t * (2 * z) ** (-1 / p)))
    return math.sqrt(f.min())


# --- constraint residual ---------------------------------------------------


def test_residual_vanishes_at_half_for_p1_t1():
    assert abs(B.gml_constraint_residual(0.5, 1.0, 1.0)) < 1e-15


@pytest.mark.parametrize("p,t", [(0.3, 0.2), (1.0, 0.5), (2.0, 0.7), (7.5, 0.95)])
def test_residual_at_half_is_pure_sine_term(p, t):
    expected = -0.5 * math.pi * t / p * math.sin(math.pi * t)
    assert B.gml_constraint_residual(0.5, p, t) == pytest.approx(expected, rel=1e-13, abs=1e-15)


def test_residual_matches_high_precision_evaluation():
    mpmath.mp.dps = 60
    z, p, t = mpmath.mpf("0.25"), mpmath.mpf(2), mpmath.mpf("0.5")
    s = (2 * z) ** (-1 / p)
    a = mpmath.pi * t * s
    exact = (1 - 2 * z) * (1 - mpmath.cos(a)) - (1 - z) * mpmath.pi * t * s * mpmath.sin(a) / p
    assert B.gml_constraint_residual(0.25, 2.0, 0.5) == pytest.approx(float(exact), abs=1e-15)


def test_residual_is_minus_half_objective_derivative():
    p, t, z, h = 1.7, 0.6, 0.31, 1e-6
    f = lambda z: 1 - 2 * z * (1 - z) * (1 - math.cos(math.pi * t * (2 * z) ** (-1 / p)))
    deriv = (f(z + h) - f(z - h)) / (2 * h)
    assert B.gml_constraint_residual(z, p, t) == pytest.approx(-0.5 * deriv, rel=1e-7)


@pytest.mark.parametrize("args", [(0.0, 1.0, 0.5), (1.0, 1.0, 0.5), (0.3, 0.0, 0.5), (0.3, -1.0, 0.5), (0.3, 1.0, 1.5)])
def test_residual_domain_errors(args):
    with pytest.raises(DomainError):
        B.gml_constraint_residual(*args)


# --- O_p ---------------------------------------------------------------------


@pytest.mark.parametrize("p", [0.1, 0.37, 1.0, 2.0, 10.0])
def test_overlap_bound_at_zero_is_one(p):
    assert B.gml_overlap_bound(p, 0.0) == 1.0


def test_overlap_bound_p1_endpoint():
    assert B.gml_overlap_bound(1.0, 1.0) == pytest.approx(0.0, abs=1e-12)


def test_overlap_bound_against_brute_force():
    assert B.gml_overlap_bound(2.0, 0.5) == pytest.approx(brute_force(2.0, 0.5), abs=1e-8)


@pytest.mark.parametrize("p,t", [(0.1, 0.3), (0.5, 0.8), (5.0, 0.2)])
def test_overlap_bound_more_brute_force_points(p, t):
    assert B.gml_overlap_bound(p, t) == pytest.approx(brute_force(p, t), abs=1e-8)


def test_overlap_bound_vectorises():
    t = np.linspace(0, 1, 7)
    vec = B.gml_overlap_bound(2.0, t)
    assert vec.shape == (7,)
    assert np.allclose(vec, [B.gml_overlap_bound(2.0, x) for x in t], atol=0, rtol=0)


@pytest.mark.parametrize("p,t", [(0.0, 0.5), (-1.0, 0.5), (1.0, -0.1), (1.0, 1.1), (1.0, math.nan)])
def test_overlap_bound_domain(p, t):
    with pytest.raises(DomainError):
        B.gml_overlap_bound(p, t)


def test_backends_agree(backend):
    t = np.linspace(0, 1, 101)
    for p in (0.1, 1.0, 3.3):
        ref = np.array([brute_force(p, x, 20001) for x in t])
        assert np.all(B.gml_overlap_bound(p, t) <= ref + 1e-12)


@given(orders, reduced)
def test_overlap_bound_in_unit_interval_and_below_cos(p, t):
    v = B.gml_overlap_bound(p, t)
    assert 0.0 <= v <= 1.0
    assert v <= math.cos(math.pi * t / 2) + 1e-9


@given(orders)
def test_overlap_bound_monotone(p):
    t = np.linspace(0, 1, 1000)
    v = B.gml_overlap_bound(p, t)
    assert np.all(np.diff(v) <= 1e-12)


@given(orders, st.floats(min_value=0.01, max_value=0.999))
def test_root_method_agrees_with_minimisation(p, t):
    value, z = B.gml_overlap_bound_by_root(p, t)
    if not math.isnan(value) and 0 < z < 0.5:
        assert value == pytest.approx(B.gml_overlap_bound(p, t), abs=1e-8)


def test_root_method_at_orthogonality():
    value, z = B.gml_overlap_bound_by_root(1.0, 1.0)
    assert value == pytest.approx(0.0, abs=1e-15)
    assert z == 0.5


def test_dual_is_same_function():
    assert B.dual_gml_overlap_bound(2.0, 0.7) == B.gml_overlap_bound(2.0, 0.7)
    assert B.dual_gml_overlap_bound(3.0, 0.0) == 1.0
    assert B.dual_gml_overlap_bound(1.0, 1.0) == pytest.approx(0.0, abs=1e-12)


# --- closed form, MT, reference ---------------------------------------------


def test_closed_form_endpoints():
    assert B.quadratic_gml_closed_form(1.0) == pytest.approx(0.0, abs=1e-15)
    assert B.quadratic_gml_closed_form(0.0) == 1.0


def test_closed_form_close_to_o2_at_half():
    assert abs(B.quadratic_gml_closed_form(0.5) - B.gml_overlap_bound(2.0, 0.5)) < 5e-4


def test_closed_form_domain():
    with pytest.raises(DomainError):
        B.quadratic_gml_closed_form(1.2)


def test_mt_bound_values():
    de = 3.0
    tau = math.pi / (2 * de)
    assert B.mt_overlap_bound(0.0, de) == 1.0
    assert B.mt_overlap_bound(tau, de) == pytest.approx(0.0, abs=1e-15)
    assert B.mt_overlap_bound(tau / 3, de) == pytest.approx(math.sqrt(3) / 2, abs=1e-15)
    with pytest.raises(DomainError):
        B.mt_overlap_bound(1.01 * tau, de)


def test_cos_reference():
    assert B.cos_reference(0.5) == pytest.approx(math.cos(math.pi / 4))


# --- inverse -----------------------------------------------------------------


def test_inverse_endpoints():
    assert B.inverse_gml_bound(3.0, 1.0) == 0.0
    assert B.inverse_gml_bound(1.0, 0.0) == pytest.approx(1.0, abs=1e-10)


def test_inverse_forward_check():
    t = B.inverse_gml_bound(2.0, 0.5)
    assert abs(B.gml_overlap_bound(2.0, t) - 0.5) < 1e-9


@given(orders, st.floats(min_value=0.0, max_value=1.0))
def test_inverse_composed_with_forward_is_identity(p, t):
    v = B.gml_overlap_bound(p, t)
    back = B.inverse_gml_bound(p, v)
    assert B.gml_overlap_bound(p, back) == pytest.approx(v, abs=1e-8)
    if v < 1.0:
        assert back <= t + 1e-8


def test_inverse_domain():
    with pytest.raises(DomainError):
        B.inverse_gml_bound(1.0, 1.5)


# --- types -------------------------------------------------------------------


def test_bound_kind_requires_order():
    with pytest.raises(DomainError):
        B.BoundKind(B.BoundFamily.GML)
    assert B.BoundKind(B.BoundFamily.MT).label == "MT"
    assert B.BoundKind(B.BoundFamily.GML, 2.0).label == "GML_p=2"


def test_bound_curve_validation():
    kind = B.BoundKind(B.BoundFamily.MT)
    B.BoundCurve(kind, [0, 1], [1, 0.5])
    with pytest.raises(ValueError):
        B.BoundCurve(kind, [0, 0], [1, 1])
    with pytest.raises(ValueError):
        B.BoundCurve(kind, [0, 1], [1, 1.2])


def test_bound_curve_helper_respects_window():
    spec = EnergySpectrum.two_level(0.2, 1.0)
    fam = B.applicable_families(spec, [1.0])[0]
    curve = B.bound_curve(fam, np.linspace(0, 10, 50))
    assert curve.times.max() <= fam.tau


def test_two_level_state_validation():
    with pytest.raises(DomainError):
        B.TwoLevelState(1.2, 1.0)
    with pytest.raises(DomainError):
        B.TwoLevelState(0.2, 0.0)


# --- envelope and unified time ------------------------------------------------


def test_envelope_starts_at_one():
    spec = EnergySpectrum.two_level(0.3, 2.0)
    assert B.unified_overlap_envelope(spec, 0.0) == 1.0


def test_envelope_tight_for_two_level():
    state = B.TwoLevelState(0.2, 1.0)
    t = np.linspace(0.05, 0.95, 7) * state.revival_time
    env = B.unified_overlap_envelope(state.spectrum(), t, np.geomspace(0.1, 3.0, 1500))
    assert np.max(np.abs(env - B.two_level_overlap(state, t))) < 1e-6


def test_envelope_equals_mt_for_mt_state():
    c = np.array([math.sqrt(2), math.sqrt(5), math.sqrt(2)]) / 3
    spec = EnergySpectrum(np.arange(3.0), c**2, 0.0, 2.0)
    de = moments(spec).std
    t = np.linspace(0.01, 0.3, 10) / de
    assert np.allclose(B.unified_overlap_envelope(spec, t), np.cos(de * t), atol=1e-12)


def test_envelope_zero_where_no_bound_applies():
    spec = EnergySpectrum.two_level(0.5, 1.0)
    assert B.unified_overlap_envelope(spec, 100.0) == 0.0


def test_unified_time_trivial_delta():
    assert B.unified_bound_time(EnergySpectrum.two_level(0.2, 1.0), 1.0) == 0.0


def test_unified_time_two_level_reachable_target():
    # the overlap^2 of rho1 = 0.2 never drops below 0.36, so test a reachable target
    state = B.TwoLevelState(0.2, 1.0)
    exact = B.two_level_first_hit_time(state, 0.6)
    got = B.unified_bound_time(state.spectrum(), 0.6, np.geomspace(0.01, 10, 400))
    assert got <= exact * (1 + 1e-9)
    assert got == pytest.approx(exact, rel=1e-3)


def test_unified_time_equal_superposition_is_mt():
    spec = EnergySpectrum.two_level(0.5, 1.0)
    assert B.unified_bound_time(spec, 0.0) == pytest.approx(math.pi, rel=1e-9)


@given(st.floats(0.0, 1.0), st.floats(0.0, 1.0))
def test_unified_time_nonincreasing_in_delta(d1, d2):
    spec = EnergySpectrum(np.array([0.0, 1.0, 2.5]), np.array([0.5, 0.3, 0.2]), 0.0, 2.5)
    grid = np.geomspace(0.1, 10, 9)
    lo, hi = sorted((d1, d2))
    assert B.unified_bound_time(spec, lo, grid) >= B.unified_bound_time(spec, hi, grid) - 1e-12


# --- two-level machinery -------------------------------------------------------


def test_two_level_overlap_examples():
    assert B.two_level_overlap(B.TwoLevelState(0.5, 1.0), math.pi) == pytest.approx(0.0, abs=1e-8)
    assert B.two_level_overlap(B.TwoLevelState(0.0, 1.0), 0.7) == 1.0
    assert B.two_level_overlap(B.TwoLevelState(0.2, 1.0), math.pi) == pytest.approx(0.6, abs=1e-15)


def test_first_hit_time_examples():
    assert B.two_level_first_hit_time(B.TwoLevelState(0.5, 1.0), 0.0) == pytest.approx(math.pi)
    assert B.two_level_first_hit_time(B.TwoLevelState(0.3, 2.0), 1.0) == 0.0
    assert B.two_level_first_hit_time(B.TwoLevelState(0.2, 1.0), 0.36) == pytest.approx(math.pi, rel=1e-7)


def test_first_hit_time_errors():
    with pytest.raises(UnreachableOverlapError):
        B.two_level_first_hit_time(B.TwoLevelState(0.2, 1.0), 0.0)
    with pytest.raises(DegenerateStateError):
        B.two_level_first_hit_time(B.TwoLevelState(0.0, 1.0), 0.5)


@given(st.floats(0.01, 0.99), st.floats(0.0, 1.0))
def test_first_hit_inverts_overlap(rho, frac):
    state = B.TwoLevelState(rho, 1.0)
    t = frac * state.revival_time
    ov = B.two_level_overlap(state, t)
    assert B.two_level_first_hit_time(state, ov**2) == pytest.approx(t, abs=1e-6)


def test_tight_p_limits():
    state = B.TwoLevelState(0.2, 1.0)
    assert B.tight_p(state, 1e-6) == pytest.approx(8 / 3, rel=1e-9)
    assert B.tight_p(state, state.revival_time * (1 - 1e-6)) < 1e-5


def test_tight_p_touches_overlap():
    state = B.TwoLevelState(0.2, 1.0)
    spec = state.spectrum()
    from unified_qsl.spectra import gml_time

    for t in np.linspace(0.1, 0.9, 5) * state.revival_time:
        p = B.tight_p(state, t)
        assert B.gml_overlap_bound(p, t / gml_time(spec, p)) == pytest.approx(B.two_level_overlap(state, t), abs=1e-8)


@given(st.floats(0.01, 0.49))
def test_tight_p_strictly_decreasing(rho):
    state = B.TwoLevelState(rho, 1.0)
    ps = [B.tight_p(state, t) for t in np.linspace(0.01, 0.99, 60) * state.revival_time]
    assert np.all(np.diff(ps) < 0)


def test_tight_p_domain():
    with pytest.raises(DomainError):
        B.tight_p(B.TwoLevelState(0.5, 1.0), 1.0)
    with pytest.raises(DomainError):
        B.tight_p(B.TwoLevelState(0.2, 1.0), 4.0)


def test_dual_tight_p_mirrors():
    assert B.dual_tight_p(B.TwoLevelState(0.8, 1.0), 1.0) == pytest.approx(B.tight_p(B.TwoLevelState(0.2, 1.0), 1.0), rel=1e-14)
