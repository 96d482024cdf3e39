import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from conftest import random_params
from robinstab.errors import LiftingDegenerate
from robinstab.model import (
    Actuation, THRESHOLD_FACTOR, TruncatedModel, build_model, controllability_rank,
    input_coefficient, input_matrix, select_mode_count,
)
from robinstab.spectral import PlantParams, compute_spectrum, benchmark_params

B11_ORACLE = 0.2495279046641599  # a r1 / (||phi_1|| sin theta1), 30-digit evaluation


def test_threshold_constant():
    assert THRESHOLD_FACTOR == pytest.approx(4.47213595499958)


def test_benchmark_mode_count(spectrum):
    assert select_mode_count(spectrum) == 2


def test_mode_count_without_delay_term():
    p = benchmark_params().replace(b=-5.0, c=0.0)
    sp = compute_spectrum(p, 5)
    assert np.all(sp.lam < 0)
    assert select_mode_count(sp) == 1


def test_mode_count_large_coupling(params):
    p = params.replace(c=10.0)
    sp = compute_spectrum(p, 40)
    threshold = -THRESHOLD_FACTOR * 10
    expected = int(np.argmax(sp.lam < threshold))  # 0-based index of first pair below
    assert select_mode_count(sp) == expected
    assert sp.lam[expected - 1] >= threshold


def test_k_independence_two_three(spectrum, params):
    for pair in spectrum.pairs:
        for m in (1, 2):
            assert input_coefficient(pair, params, m, 2) == pytest.approx(
                input_coefficient(pair, params, m, 3), abs=1e-12)


def test_left_coefficient_closed_form(spectrum, params):
    for pair in spectrum.pairs:
        direct = params.a * pair.r / (pair.norm_phi * math.sin(params.theta1))
        assert input_coefficient(pair, params, 1) == pytest.approx(direct, abs=1e-12)
    assert input_coefficient(spectrum.pairs[0], params, 1) == pytest.approx(B11_ORACLE, abs=1e-13)


def test_all_coefficients_nonzero(spectrum):
    assert np.all(np.abs(input_matrix(spectrum, 30)) > 1e-8)


def test_input_coefficient_rejects_bad_arguments(spectrum, params):
    with pytest.raises(ValueError):
        input_coefficient(spectrum.pairs[0], params, 3)
    with pytest.raises(ValueError):
        input_coefficient(spectrum.pairs[0], params, 1, k=1)


def test_degenerate_lifting():
    # cos(theta) + 2 sin(theta) = 0 needs cot(theta) = -2, outside the supported
    # branch; bypass validation to exercise the guard.
    p = object.__new__(PlantParams)
    for name, v in dict(a=0.2, b=2.0, c=1.0, theta1=math.atan2(1, -2), theta2=0.3,
                        h_m=0.5, h_M=3.5).items():
        object.__setattr__(p, name, v)
    pair = compute_spectrum(benchmark_params(), 1).pairs[0]
    with pytest.raises(LiftingDegenerate):
        input_coefficient(pair, p, 1, k=2)


@settings(max_examples=20, deadline=None)
@given(st.integers(0, 2 ** 32 - 1))
def test_k_invariance_random_params(seed):
    p = random_params(np.random.default_rng(seed))
    sp = compute_spectrum(p, 10)
    for pair in sp.pairs:
        for m in (1, 2):
            vals = [input_coefficient(pair, p, m, k) for k in range(2, 7)]
            assert max(vals) - min(vals) <= 1e-11 * max(1.0, max(map(abs, vals)))


def test_benchmark_model(model2):
    np.testing.assert_allclose(np.diag(model2.A), [2.5561, -0.1186], atol=1e-3)
    assert np.all(model2.B != 0)
    assert model2.beta == pytest.approx(6.2299 / 2, abs=1e-3)
    d = model2.to_dict()
    assert d["N0"] == 2 and len(d["B"]) == 2 and d["actuation"] == "both"


def exact_krylov_rank(A, B):
    """Rank of [B, AB, ..., A^(n-1) B] in exact rational arithmetic."""
    import sympy
    n = A.shape[0]
    As = sympy.Matrix(n, n, lambda i, j: sympy.Rational(float(A[i, j])))
    Bs = sympy.Matrix(n, B.shape[1], lambda i, j: sympy.Rational(float(B[i, j])))
    blocks, cur = [Bs], Bs
    for _ in range(n - 1):
        cur = As * cur
        blocks.append(cur)
    return sympy.Matrix.hstack(*blocks).rank()


@pytest.mark.parametrize("seed", range(3))
def test_kalman_rank_random(seed):
    rng = np.random.default_rng(100 + seed)
    p = random_params(rng)
    sp = compute_spectrum(p, 11)
    for n0 in (1, 4, 10):
        m = build_model(sp, p, n0)
        for B in (m.B, m.B[:, :1], m.B[:, 1:]):
            assert controllability_rank(m.A, B) == n0
    m = build_model(sp, p, 10)
    assert exact_krylov_rank(m.A, m.B[:, seed % 2:seed % 2 + 1]) == 10


def test_kalman_rank_detects_uncontrollable_mode():
    A = np.diag([1.0, -2.0, -5.0])
    B = np.array([[1.0, 0.0], [0.0, 0.0], [2.0, 1.0]])
    assert controllability_rank(A, B) == 2 == exact_krylov_rank(A, B)
    A2 = np.diag([-1.0, -1.0])  # repeated eigenvalue, one input
    assert controllability_rank(A2, np.array([[1.0], [1.0]])) == 1


def test_actuation_parse():
    assert Actuation.parse("LEFT") is Actuation.LEFT
    assert Actuation.RIGHT.columns == (1,)
    with pytest.raises(ValueError, match="both\\|left\\|right"):
        Actuation.parse("middle")


def test_build_model_rejects_mismatched_params(spectrum):
    with pytest.raises(ValueError):
        build_model(spectrum, spectrum.params.replace(a=1.0), 2)
    assert isinstance(build_model(spectrum), TruncatedModel)
