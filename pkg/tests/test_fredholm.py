import json
import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from scipy.integrate import quad
from scipy.special import eval_laguerre

from whlab.errors import CrossValidationFailure, NonElliptic, PathEllipticityFailure, TransversalityFailure
from whlab.fredholm import (
    AnalyzeOptions,
    analyze,
    explicit_estimator,
    homotopy_verify,
    kernel_basis,
    laguerre_function,
    perturbation_experiment,
    rational_form,
    svd_estimator,
    toeplitz_estimator,
    unit_normal,
)
from whlab.grids import HalfLine
from whlab.symbol import Constant, Rational, Scaled, pl_approximate

FAST = AnalyzeOptions(n=512)


# --- kernel basis -------------------------------------------------------------------


def test_psi0_value_at_origin():
    assert laguerre_function(0, 0.0) == pytest.approx(math.sqrt(2))


def test_psi1_closed_form():
    x = np.linspace(0, 10, 101)
    assert np.allclose(laguerre_function(1, x), math.sqrt(2) * np.exp(-x) * (1 - 2 * x))


@pytest.mark.parametrize("k", range(4))
def test_laguerre_functions_orthonormal(k):
    for j in range(k + 1):
        val = quad(lambda x: 2 * np.exp(-2 * x) * eval_laguerre(k, 2 * x) * eval_laguerre(j, 2 * x),
                   0, np.inf)[0]
        assert val == pytest.approx(1.0 if j == k else 0.0, abs=1e-6)


def test_kernel_basis():
    kb = kernel_basis(3)
    assert kb.n == 3 and len(kb.functions) == 3
    assert max(kb.cross_errors) < 1e-3
    assert max(kb.residuals) < 5e-3
    assert kb.gram_condition() < 10
    for f in kb.functions:
        assert f.lp(2) == pytest.approx(1.0, abs=1e-3)
    assert kb.functions[0].samples[0].real == pytest.approx(math.sqrt(2), rel=1e-2)


def test_kernel_basis_cross_validation_failure_on_coarse_grid():
    with pytest.raises(CrossValidationFailure):
        kernel_basis(4, HalfLine(40.0, 128))


def test_kernel_basis_rejects_bad_n():
    with pytest.raises(ValueError):
        kernel_basis(0)


# --- estimators ------------------------------------------------------------------------


def test_rational_form():
    assert rational_form(Rational(3)) == (1, 3)
    assert rational_form(Scaled(Rational(-2), 2j)) == (2j, -2)
    assert rational_form(Constant(4.0)) == (4.0, 0)
    assert rational_form(Rational(1) + 2) is None


@pytest.mark.parametrize("n", [-2, 0, 1, 3])
def test_estimators_on_rational(n):
    a = Rational(n)
    for est in (explicit_estimator, svd_estimator, toeplitz_estimator):
        r = est(a, FAST)
        assert r.confident, (r.name, r.detail)
        assert (r.kernel, r.cokernel) == (max(-n, 0), max(n, 0))
        assert r.index == -n


def test_explicit_estimator_declines_non_rational():
    r = explicit_estimator(Rational(1) + 2, FAST)
    assert r.kernel is None and not r.confident


# --- analyze ---------------------------------------------------------------------------------


@pytest.mark.parametrize("n", [-2, -1, 1, 2])
def test_analyze_rational(n):
    rep = analyze(Rational(n), FAST)
    assert rep.verdict == "Fredholm" and rep.index == -n
    assert rep.winding == n and rep.predicted_index == -n
    assert rep.numerical_kernel_dim - rep.numerical_cokernel_dim == -n
    assert set(rep.agreeing()) == {"explicit", "svd", "toeplitz"}


def test_analyze_identity():
    rep = analyze(Constant(1.0), FAST)
    assert rep.verdict == "Fredholm" and rep.index == 0
    assert (rep.numerical_kernel_dim, rep.numerical_cokernel_dim) == (0, 0)


def test_analyze_not_fredholm():
    for a in (Rational(1) + 1, Constant(0.0)):
        rep = analyze(a, FAST)
        assert rep.verdict == "NotFredholm" and not rep.elliptic
        assert rep.predicted_index is None and rep.index is None


def test_analyze_shifted_circle():
    rep = analyze(Rational(1) + 2, FAST)
    assert rep.verdict == "Fredholm" and rep.index == 0
    rep = analyze(Rational(-1) + 0.5, FAST)
    assert rep.verdict == "Fredholm" and rep.index == 1


def test_analyze_without_numerics():
    rep = analyze(Rational(2) + 0.3, AnalyzeOptions(numerics=False))
    assert rep.verdict == "Fredholm" and rep.index == -2 and rep.estimators == {}


def test_analyze_inconclusive_when_agreement_impossible():
    opts = AnalyzeOptions(n=512, estimators=("svd",), min_agree=2)
    rep = analyze(Rational(1), opts)
    assert rep.verdict == "Inconclusive" and rep.index is None
    assert rep.predicted_index == -1


def test_analyze_scale_invariant_numerically():
    for c in (3.0, -0.5j):
        a, b = analyze(Rational(2), FAST), analyze(Scaled(Rational(2), c), FAST)
        assert (a.verdict, a.index) == (b.verdict, b.index)


@settings(max_examples=25, deadline=None)
@given(st.integers(-3, 3), st.floats(0.05, 0.9),
       st.complex_numbers(min_magnitude=0.01, max_magnitude=100, allow_nan=False, allow_infinity=False))
def test_analyze_scale_invariant(n, w, c):
    a = Rational(n) + w * Rational(-1) + 0.05
    opts = AnalyzeOptions(numerics=False)
    ra, rb = analyze(a, opts), analyze(Scaled(a, c), opts)
    assert (ra.verdict, ra.index) == (rb.verdict, rb.index)


def test_report_serializes():
    d = analyze(Rational(1), FAST).to_dict()
    text = json.dumps(d, sort_keys=True)
    assert "spectra" not in text
    assert d["provenance"]["grid"] == {"type": "half_line", "length": 40.0, "n": 512}
    assert d["verdict"] == "Fredholm"


# --- homotopy ---------------------------------------------------------------------------------


def test_homotopy_constant_path():
    rep = homotopy_verify(Rational(2))
    assert rep.passed and set(rep.indices) == {-2}


def test_homotopy_shifted_circle():
    rep = homotopy_verify(Rational(1) + 2)
    assert rep.passed and set(rep.indices) == {0}
    assert rep.elliptic_throughout and rep.endpoints_ok and rep.variation_bound_ok
    assert len(rep.indices) == 21
    assert json.loads(json.dumps(rep.to_dict()))["passed"] is True


def test_homotopy_pl_approximation_coarse():
    b = pl_approximate(Rational(1), 0.5).symbol
    rep = homotopy_verify(b, steps=5)
    assert rep.passed and set(rep.indices) == {-1}


def test_homotopy_rejects_non_elliptic():
    with pytest.raises(NonElliptic):
        homotopy_verify(Rational(1) + 1)
    with pytest.raises(ValueError):
        homotopy_verify(Rational(1), steps=0)


def test_path_ellipticity_failure_carries_t():
    err = PathEllipticityFailure(0.25, 1e-14)
    assert "0.25" in str(err)


# --- perturbation ---------------------------------------------------------------------------------


def test_perturbation_across_zero():
    rep = perturbation_experiment(Rational(1) + 1, v=1.0, eps=0.1)
    assert rep.plus.winding == 0 and rep.minus.winding == 1
    assert rep.winding_jump == 1 and abs(rep.index_jump) == 1
    assert rep.operator_gap == pytest.approx(0.2, abs=1e-3)
    assert rep.expected_gap == pytest.approx(0.2)
    assert rep.xi0 == pytest.approx(0.0, abs=1e-6)


def test_perturbation_default_direction_is_normal():
    a = Rational(1) + 1
    v = unit_normal(a, 0.0)
    assert abs(v) == pytest.approx(1.0)
    # the tangent of r_1 at xi = 0 is vertical, so the normal is real
    assert abs(v.imag) < 1e-6
    rep = perturbation_experiment(a, eps=0.05)
    assert abs(rep.winding_jump) == 1
    assert rep.operator_gap == pytest.approx(0.1, abs=1e-3)


def test_perturbation_too_large():
    with pytest.raises(TransversalityFailure):
        perturbation_experiment(Rational(1) + 1, v=1.0, eps=2.0)
    with pytest.raises(ValueError):
        perturbation_experiment(Rational(1) + 1, eps=0.0)
