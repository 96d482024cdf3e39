import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from robinstab.control import (
    ControllerDesign, PolePolicy, certify_rates, delta_certificate, design_for_decay_rate,
    eta_certificate, place_poles, pole_constraint_ok, synthesize,
)
from robinstab.errors import (ConstraintViolated, PlacementIllConditioned,
                              PolesNotConjugateClosed, PolesNotDistinct)
from robinstab.model import TruncatedModel, build_model
from robinstab.spectral import compute_spectrum, benchmark_params

# Direct 30-digit evaluations of the certificates at zero rate.
DELTA0_BENCHMARK = 0.8571414899664594   # c = 1, alpha = 3.5, h_M = 3.5
ETA0_BENCHMARK = 0.5153051801645662     # c = 1, beta = -lambda_3 / 2, h_M = 3.5


def sorted_eigs(M):
    z = np.linalg.eigvals(M)
    return z[np.lexsort((z.imag, z.real))]


def custom_model(lam, B, c=0.5):
    sp = compute_spectrum(benchmark_params().replace(c=c), len(lam) + 1)
    return TruncatedModel(len(lam), np.diag(lam), np.asarray(B, dtype=float), sp)


# ---------------------------------------------------------------- placement

def test_decoupled_channels():
    K = place_poles(custom_model([-1.0, -2.0], np.eye(2)), [-3.0, -4.0])
    np.testing.assert_allclose(K, np.diag([-2.0, -2.0]), atol=1e-12)


@pytest.mark.parametrize("actuation", ["both", "left", "right"])
def test_benchmark_placement(model2, actuation):
    K = place_poles(model2, [-3.5, -4.0], actuation)
    np.testing.assert_allclose(sorted_eigs(model2.A + model2.B @ K).real, [-4.0, -3.5],
                               atol=1e-8)
    if actuation == "left":
        assert np.all(K[1] == 0)
    if actuation == "right":
        assert np.all(K[0] == 0)


def test_complex_pair_placement(model2):
    mu = [-4 + 1j, -4 - 1j]
    K = place_poles(model2, mu)
    assert K.dtype == float
    np.testing.assert_allclose(sorted_eigs(model2.A + model2.B @ K), sorted_eigs(np.diag(mu)),
                               atol=1e-8)


@settings(max_examples=30, deadline=None)
@given(st.integers(1, 6), st.integers(0, 2 ** 32 - 1))
def test_random_placement(n, seed):
    rng = np.random.default_rng(seed)
    lam = np.sort(rng.uniform(-5, 5, n))[::-1]
    if n > 1 and np.diff(lam).max() > -0.3:
        lam = 5 - 1.5 * np.arange(n)
    B = rng.uniform(0.5, 2, (n, 2)) * rng.choice([-1, 1], (n, 2))
    mu = -2.0 - np.cumsum(rng.uniform(0.5, 1.5, n))
    m = custom_model(lam, B)
    K = place_poles(m, mu, "both")
    np.testing.assert_allclose(sorted_eigs(m.A + m.B @ K).real, np.sort(mu), atol=1e-8, rtol=0)
    # One input needs large gains for many poles; the result is either verified
    # to 1e-8 or refused.
    try:
        K = place_poles(m, mu, "left")
    except PlacementIllConditioned:
        assert n >= 4
    else:
        np.testing.assert_allclose(sorted_eigs(m.A + m.B @ K).real, np.sort(mu), atol=1e-8,
                                   rtol=0)


def test_rejects_repeated_poles(model2):
    with pytest.raises(PolesNotDistinct):
        place_poles(model2, [-4.0, -4.0])


def test_rejects_unpaired_complex_pole(model2):
    with pytest.raises(PolesNotConjugateClosed):
        place_poles(model2, [-4 + 1j, -5 + 0j])


def test_rejects_pole_on_open_loop_eigenvalue():
    m = custom_model([-4.0, -6.0], np.eye(2))
    with pytest.raises(PlacementIllConditioned):
        place_poles(m, [-4.0, -5.0])


def test_rejects_slow_poles(model2):
    with pytest.raises(ConstraintViolated):
        place_poles(model2, [-2.5 + 1j, -2.5 - 1j])
    with pytest.warns(UserWarning):
        place_poles(model2, [-2.5 + 1j, -2.5 - 1j], enforce_constraint=False)


def test_wrong_pole_count(model2):
    with pytest.raises(ValueError):
        place_poles(model2, [-4.0])


def test_pole_constraint():
    assert pole_constraint_ok([-3.5, -4.0], 1.0)
    assert pole_constraint_ok([-2.5, -4.0], 1.0)        # real poles: < -2|c|
    assert not pole_constraint_ok([-2.5 + 1j, -2.5 - 1j], 1.0)
    assert not pole_constraint_ok([-1.9, -4.0], 1.0)


# -------------------------------------------------------------- certificates

def test_delta_at_zero_rate():
    assert delta_certificate(1.0, 3.5, 0.0, 3.5) == pytest.approx(DELTA0_BENCHMARK, abs=1e-12)
    for alpha in (3.01, 5.0, 20.0):
        d = delta_certificate(1.0, alpha, 0.0, 3.5)
        assert d == pytest.approx((3 - math.exp(-alpha * 3.5)) / alpha)
        assert d <= 3 / alpha * (1 + 1e-15)


def test_eta_at_zero_rate(model2):
    beta = model2.beta
    assert eta_certificate(1.0, beta, 0.0, 3.5) == pytest.approx(ETA0_BENCHMARK, abs=1e-9)
    assert eta_certificate(1.0, beta, 0.0, 3.5) <= 5 / beta ** 2


def test_certificates_vanish_without_delay_term():
    assert delta_certificate(0.0, 3.5, 1.0, 3.5) == 0.0
    assert eta_certificate(0.0, 3.0, 1.0, 3.5) == 0.0


def test_certificate_domains():
    with pytest.raises(ValueError):
        delta_certificate(1.0, 3.5, 3.5, 3.5)
    with pytest.raises(ValueError):
        eta_certificate(1.0, 3.0, -0.1, 3.5)


@settings(max_examples=200, deadline=None)
@given(st.floats(-5, 5), st.floats(1.0001, 10), st.floats(0.1, 10))
def test_zero_rate_certificates_below_one(c, ratio, h_M):
    assert delta_certificate(c, 3 * abs(c) * ratio + 1e-9, 0.0, h_M) < 1
    assert eta_certificate(c, math.sqrt(5) * abs(c) * ratio + 1e-9, 0.0, h_M) < 1


@settings(max_examples=100, deadline=None)
@given(st.floats(0.1, 3), st.floats(3.1, 10), st.floats(0.0, 0.99), st.floats(0.0, 0.99))
def test_certificates_increase_with_rate(c, alpha, s1, s2):
    lo, hi = sorted((s1 * alpha, s2 * alpha))
    assert delta_certificate(c, alpha, lo, 3.5) <= delta_certificate(c, alpha, hi, 3.5)
    assert eta_certificate(c, alpha, lo, 3.5) <= eta_certificate(c, alpha, hi, 3.5)


def test_benchmark_rates(model2):
    rates = certify_rates(model2, [-3.5, -4.0])
    assert rates.sigma > 0 and rates.kappa > 0
    assert abs(rates.delta - 1) < 1e-6
    # kappa is capped by sigma here, so eta stays well below one.
    assert rates.kappa <= rates.sigma
    assert rates.eta < 1
    assert eta_certificate(1.0, model2.beta, rates.kappa, 3.5) == pytest.approx(rates.eta)


def test_rates_without_delay_term():
    sp = compute_spectrum(benchmark_params().replace(c=0.0), 3)
    m = build_model(sp, N0=2)
    rates = certify_rates(m, [-3.5, -4.0])
    assert rates.sigma == pytest.approx(3.5, abs=1e-8)
    assert rates.kappa == pytest.approx(min(m.beta, 3.5), abs=1e-8)
    assert rates.delta == rates.eta == 0.0


def test_rates_reject_boundary_alpha(model2):
    with pytest.raises(ConstraintViolated):
        certify_rates(model2, [-3.0, -4.0])


def test_real_relaxation(model2):
    with pytest.raises(ConstraintViolated):
        synthesize(model2, [-2.5, -4.0])
    design = synthesize(model2, [-2.5, -4.0], real_relaxation=True)
    assert design.delta < 1


# --------------------------------------------------------------- synthesis

def test_synthesize_benchmark(model2):
    d = synthesize(model2, [-3.5, -4.0])
    assert (d.N0, d.alpha) == (2, 3.5)
    assert d.beta == pytest.approx(3.11496196421648)
    assert 0 < d.kappa <= d.sigma < d.alpha
    again = ControllerDesign.from_dict(d.to_dict())
    np.testing.assert_array_equal(again.K, d.K)
    assert again.kappa == d.kappa


def test_design_invariant_enforced(model2):
    d = synthesize(model2, [-3.5, -4.0]).to_dict()
    d["delta"] = 1.5
    with pytest.raises(ConstraintViolated):
        ControllerDesign.from_dict(d)


def test_complex_design_round_trip(model2):
    d = synthesize(model2, [-4 + 1j, -4 - 1j])
    again = ControllerDesign.from_dict(d.to_dict())
    np.testing.assert_allclose(again.mu, d.mu)


def test_design_for_small_rate(params, spectrum):
    n0, mu, design = design_for_decay_rate(params, spectrum, 0.05)
    assert n0 >= 2 and design.kappa >= 0.05
    assert design.delta < 1 and design.eta < 1
    n0_min, _, _ = design_for_decay_rate(params, spectrum, 1e-6)
    assert n0_min == 2


def test_design_for_larger_rate(params, spectrum):
    n0, mu, design = design_for_decay_rate(params, spectrum, 0.5)
    assert design.kappa == 0.5 and design.sigma > 0.5
    assert eta_certificate(params.c, design.beta, 0.5, params.h_M) < 1
    m = build_model(spectrum, params, n0)
    np.testing.assert_allclose(sorted_eigs(m.A + m.B @ design.K).real, np.sort(mu), atol=1e-6)


def test_design_without_delay_term():
    p = benchmark_params().replace(c=0.0)
    sp = compute_spectrum(p, 10)
    n0, _, design = design_for_decay_rate(p, sp, 0.05)
    assert n0 == max(1, int(np.sum(sp.lam >= 0)))
    assert design.delta == 0 and design.eta == 0


def test_design_rejects_nonpositive_rate(params, spectrum):
    with pytest.raises(ValueError):
        design_for_decay_rate(params, spectrum, 0.0)


def test_design_policy_alpha_cap(params, spectrum):
    with pytest.raises(ConstraintViolated):
        design_for_decay_rate(params, spectrum, 0.3, PolePolicy(alpha_cap=4.0))
