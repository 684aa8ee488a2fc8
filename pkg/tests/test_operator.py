import warnings

import numpy as np
import pytest

from whlab.errors import AliasWarning, SingularPoint
from whlab.grids import Circle, HalfLine, Line
from whlab.operator import (
    OperatorMatrix,
    SingularValueProfile,
    adjoint,
    apply_cauchy_singular_line,
    apply_fourier_convolution,
    apply_wiener_hopf,
    cauchy_singular_circle,
    cauchy_singular_line,
    circle_conjugation_residual,
    compactness_evidence,
    embedding_line,
    fourier_convolution,
    inverse_mobius_transform,
    mobius_isometry_gap,
    mobius_transform,
    multiplier,
    multiplier_norm_lower_bound,
    restriction,
    riesz_projection,
    semi_commutator,
    semi_commutator_identity,
    spectral_norm,
    toeplitz_section,
    wiener_hopf,
    zero_extension,
)
from whlab.spaces import GridFunction, Orlicz, PowerDensity
from whlab.symbol import Constant, PiecewiseLinear, PLData, Rational, pl_approximate


def smooth_pl():
    return PiecewiseLinear(PLData.from_values([-2.0, 0.0, 1.0, 3.0], [1.0, 2 + 1j, 1.5, 1.0]))


# --- Fourier convolution -----------------------------------------------------------


def test_constant_convolution_is_scalar(line):
    for c in (1.0, 2 - 3j):
        A = fourier_convolution(Constant(c), line)
        assert np.max(np.abs(A.entries - c * np.eye(line.n))) < 1e-12


def test_fourier_transform_of_psi0():
    # F psi0 = i sqrt(2) / (xi + i) for psi0 = sqrt(2) e^{-x} on x > 0
    g = Line(40.0, 4096)
    x, xi = g.midpoints(), g.frequencies()[:50]
    f = np.where(x > 0, np.sqrt(2) * np.exp(-x), 0.0)
    F = g.h * np.exp(1j * np.outer(xi, x)) @ f
    assert np.max(np.abs(F - 1j * np.sqrt(2) / (xi + 1j))) < 1e-3


def test_convolution_is_multiplicative(line):
    a, b = Rational(2) + 0.5, smooth_pl()
    lhs = fourier_convolution(a, line) @ fourier_convolution(b, line)
    rhs = fourier_convolution(a * b, line)
    assert np.max(np.abs(lhs.entries - rhs.entries)) < 1e-12


@pytest.mark.parametrize("scheme", ["bilinear", "collocation"])
def test_apply_matches_matrix(line, scheme):
    a = Rational(1) + smooth_pl()
    f = np.random.default_rng(0).standard_normal((line.n, 2))
    A = fourier_convolution(a, line, scheme)
    assert np.allclose(apply_fourier_convolution(a, line, f, scheme), A.entries @ f)


def test_unknown_scheme(line):
    with pytest.raises(ValueError):
        multiplier(Rational(1), line, scheme="galerkin")


def test_bilinear_multiplier_is_unimodular_for_rational(line):
    for n in (-3, 1, 4):
        assert np.allclose(np.abs(multiplier(Rational(n), line, warn=False)), 1.0)


def test_alias_warning_for_unresolved_symbol():
    fast = PiecewiseLinear(PLData.from_values([0.0, 0.01, 0.02], [1.0, 3.0, 1.0]))
    with pytest.warns(AliasWarning):
        multiplier(fast, Line(5.0, 64))
    with warnings.catch_warnings():
        warnings.simplefilter("error")
        multiplier(Rational(1), Line(40.0, 2048))


# --- Wiener-Hopf ----------------------------------------------------------------------


def test_wiener_hopf_constant(half_line):
    A = wiener_hopf(Constant(3j), half_line)
    assert np.max(np.abs(A.entries - 3j * np.eye(half_line.n))) < 1e-12


def test_restriction_after_extension_is_identity(half_line):
    line = embedding_line(half_line)
    rl = restriction(line, half_line) @ zero_extension(half_line, line)
    assert np.array_equal(rl.entries, np.eye(half_line.n))


def test_wiener_hopf_is_compression(half_line):
    a = Rational(1) + smooth_pl()
    line = embedding_line(half_line)
    direct = restriction(line, half_line) @ fourier_convolution(a, line) @ zero_extension(half_line, line)
    assert np.max(np.abs(direct.entries - wiener_hopf(a, half_line).entries)) < 1e-12


def test_apply_wiener_hopf_matches_matrix(half_line):
    f = np.random.default_rng(1).standard_normal(half_line.n)
    a = Rational(-2)
    assert np.allclose(apply_wiener_hopf(a, half_line, f), wiener_hopf(a, half_line).entries @ f)


def test_psi0_in_kernel_of_w_r_minus_one():
    g = HalfLine(40.0, 1024)
    psi0 = np.sqrt(2) * np.exp(-g.midpoints())
    r = apply_wiener_hopf(Rational(-1), g, psi0)
    assert np.linalg.norm(r) / np.linalg.norm(psi0) < 5e-3


@pytest.mark.parametrize("n", [1, 2, 4])
def test_right_invertibility(half_line, n):
    x = half_line.midpoints()
    rng = np.random.default_rng(n)
    for _ in range(5):
        c = rng.standard_normal(3)
        f = (c[0] + c[1] * x + c[2] * x ** 2) * np.exp(-x / (1 + rng.random()))
        g = apply_wiener_hopf(Rational(-n), half_line, apply_wiener_hopf(Rational(n), half_line, f))
        assert np.linalg.norm(g - f) / np.linalg.norm(f) < 1e-2


@pytest.mark.parametrize("n", [-3, 1, 2])
def test_adjoint_is_conjugate_symbol(half_line, n):
    A = adjoint(wiener_hopf(Rational(n), half_line))
    assert np.max(np.abs(A.entries - wiener_hopf(Rational(-n), half_line).entries)) < 1e-10


def test_adjoint_of_pl_symbol(half_line):
    from whlab.symbol import conjugate
    a = smooth_pl()
    A = adjoint(wiener_hopf(a, half_line))
    assert np.max(np.abs(A.entries - wiener_hopf(conjugate(a), half_line).entries)) < 1e-10


def test_adjoint_involution():
    rng = np.random.default_rng(2)
    g = HalfLine(1.0, 7)
    A = OperatorMatrix(rng.standard_normal((7, 7)) + 1j * rng.standard_normal((7, 7)), g, g)
    assert np.array_equal(adjoint(adjoint(A)).entries, A.entries)
    c = OperatorMatrix((2 + 1j) * np.eye(7), g, g)
    assert np.array_equal(adjoint(c).entries, (2 - 1j) * np.eye(7))


# --- singular integral operators -----------------------------------------------------------


def test_cauchy_involution(line):
    S = cauchy_singular_line(line)
    assert spectral_norm(S.entries @ S.entries - np.eye(line.n)) < 1e-10
    P = riesz_projection(line)
    assert spectral_norm(P.entries @ P.entries - P.entries) < 1e-10


def test_cauchy_commutes_with_constants(line):
    S = cauchy_singular_line(line).entries
    c = (2 - 1j) * np.eye(line.n)
    assert spectral_norm(c @ S - S @ c) < 1e-12


def test_apply_cauchy_matches_matrix(line):
    f = np.random.default_rng(3).standard_normal(line.n)
    assert np.allclose(apply_cauchy_singular_line(line, f), cauchy_singular_line(line).entries @ f)


def test_cauchy_on_hardy_functions():
    # 1/(x + i) continues analytically into Im x > 0 and is kept by P+;
    # 1/(x - i) continues into Im x < 0 and is annihilated.  The window
    # truncation of the slow 1/x tails limits the accuracy.
    g = Line(400.0, 2 ** 14)
    x = g.midpoints()
    mid = np.abs(x) < 50
    for sign in (1, -1):
        f = 1.0 / (x + sign * 1j)
        assert np.max(np.abs(apply_cauchy_singular_line(g, f) - sign * f)[mid]) < 1e-2


def test_cauchy_circle_action():
    c = Circle(32)
    t = c.points()
    S = cauchy_singular_circle(c)
    for k in (-5, -1, 0, 3, 10):
        expected = (1 if k >= 0 else -1) * t ** k
        assert np.allclose(S @ t ** k, expected, atol=1e-12)


# --- circle transfer -----------------------------------------------------------------------


def test_mobius_round_trip():
    rng = np.random.default_rng(4)
    c = rng.standard_normal(5) + 1j * rng.standard_normal(5)

    def f(t):
        return sum(ck * t ** (k - 2) for k, ck in enumerate(c))

    x = np.linspace(-30, 30, 601)
    t = (x - 1j) / (x + 1j)
    for p in (1.5, 2.0, 4.0):
        g = mobius_transform(f, x, p)
        back = inverse_mobius_transform(g, t, p)
        assert np.max(np.abs(back - f(t))) < 1e-10


def test_mobius_of_one():
    x = np.linspace(-5, 5, 11)
    assert np.allclose(mobius_transform(lambda t: np.ones_like(t), x, 3.0), 2 ** (2 / 3) / (x + 1j))


def test_mobius_singular_points():
    with pytest.raises(SingularPoint):
        mobius_transform(lambda t: t, np.array([0.0, np.inf]))
    with pytest.raises(SingularPoint):
        inverse_mobius_transform(lambda x: x, np.array([1.0 + 0j]))


@pytest.mark.parametrize("p", [1.5, 2.0, 3.0])
def test_mobius_isometry(p):
    def f(t):
        return (1 - t) * (t ** 2 + 0.5 / t + 0.3j)

    assert mobius_isometry_gap(f, Circle(4096), Line(400.0, 2 ** 17), p) < 1e-3


def test_mobius_isometry_constant_function():
    assert mobius_isometry_gap(lambda t: np.ones_like(t), Circle(4096), Line(400.0, 2 ** 17)) < 1e-3


def test_circle_conjugation():
    assert circle_conjugation_residual({1: 1.0, 0: -1.0}, Line(200.0, 2 ** 14)) < 1e-3


# --- Toeplitz sections --------------------------------------------------------------------


def test_toeplitz_shift():
    T = toeplitz_section(Rational(1), 16)
    assert np.allclose(T.entries, np.eye(16, k=-1), atol=1e-13)
    assert T.norm() == pytest.approx(1.0, abs=1e-12)


def test_toeplitz_constant():
    assert np.allclose(toeplitz_section(Constant(2 + 1j), 10).entries, (2 + 1j) * np.eye(10))


@pytest.mark.parametrize("n", [-4, -1, 1, 2, 3, 4])
def test_toeplitz_rational_defect(n):
    s = toeplitz_section(Rational(n), 64).singular_values()
    assert np.count_nonzero(s < 1e-8) == abs(n)


def test_toeplitz_alias_warning_for_slow_decay():
    with pytest.warns(AliasWarning):
        toeplitz_section(smooth_pl(), 32)


# --- semi-commutators -------------------------------------------------------------------------


def test_semi_commutator_with_constant(half_line):
    for a, b in ((Constant(2.0), Rational(3)), (smooth_pl(), Constant(1j))):
        assert spectral_norm(semi_commutator(a, b, half_line).entries) < 1e-10


@pytest.mark.parametrize("n", [1, 2, 3])
def test_semi_commutator_projection(half_line, n):
    P = -semi_commutator(Rational(n), Rational(-n), half_line).entries
    assert spectral_norm(P @ P - P) < 1e-6
    assert spectral_norm(wiener_hopf(Rational(-n), half_line).entries @ P) < 1e-6
    s = np.linalg.svd(P, compute_uv=False)
    assert np.allclose(s[:n], 1.0, atol=1e-6) and s[n] < 1e-3


def test_semi_commutator_identity_small_grid():
    res = semi_commutator_identity(Rational(1), Rational(-1), HalfLine(40.0, 128))
    assert res.relative_gap < 0.05
    assert res.lhs_norm == pytest.approx(1.0, abs=1e-6)


def test_semi_commutator_identity_pl_pair():
    a = pl_approximate(Rational(1) + 2, 0.5).symbol
    b = smooth_pl()
    res = semi_commutator_identity(a, b, HalfLine(40.0, 128))
    assert res.relative_gap < 0.05


# --- compactness evidence -----------------------------------------------------------------------


def test_compactness_rank_one_projector():
    def build(g):
        v = np.exp(-g.midpoints())
        v /= np.linalg.norm(v)
        return OperatorMatrix(np.outer(v, v), g, g)

    ev = compactness_evidence(build, [HalfLine(10.0, n) for n in (32, 64, 128)])
    assert ev.ranks == (1, 1, 1) and ev.stable_rank and ev.tails_decay
    assert all(np.all(p.sigma[1:] < 1e-12) for p in ev.profiles)


def test_compactness_semi_commutator_vs_reference():
    grids = [HalfLine(40.0, n) for n in (64, 128, 256)]
    ev = compactness_evidence(lambda g: semi_commutator(Rational(1), Rational(-1), g), grids)
    assert ev.ranks == (1, 1, 1) and ev.tails_decay
    assert ev.leading_drift() < 1e-6
    ref = compactness_evidence(lambda g: wiener_hopf(Rational(1), g), grids)
    # the truncation drops one direction (the cokernel of W(r_1)); the rest is a plateau
    assert ref.ranks == tuple(g.n - 1 for g in grids) and not ref.stable_rank
    assert min(ref.plateau_fraction()) > 0.9


# --- operator matrix plumbing --------------------------------------------------------------------


def test_operator_matrix_validation_and_algebra():
    g, h = HalfLine(1.0, 3), HalfLine(1.0, 4)
    with pytest.raises(ValueError):
        OperatorMatrix(np.zeros((3, 4)), g, g)
    with pytest.raises(ValueError):
        OperatorMatrix(np.full((3, 3), np.inf), g, g)
    A = OperatorMatrix(np.ones((4, 3)), g, h, "A")
    B = OperatorMatrix(np.eye(3), g, g, "B")
    assert (A @ B).shape == (4, 3)
    with pytest.raises(ValueError):
        B @ A
    with pytest.raises(ValueError):
        A + B
    assert np.array_equal((2 * B - B).entries, np.eye(3))
    gf = A @ GridFunction(g, np.ones(3))
    assert isinstance(gf, GridFunction) and gf.domain == h


def test_spectral_norm_matches_svd():
    rng = np.random.default_rng(5)
    for shape in ((10, 4), (4, 10), (7, 7)):
        a = rng.standard_normal(shape) + 1j * rng.standard_normal(shape)
        assert spectral_norm(a) == pytest.approx(np.linalg.svd(a, compute_uv=False)[0], rel=1e-12)
    assert spectral_norm(np.zeros((0, 3))) == 0.0


def test_singular_value_profile():
    p = SingularValueProfile(np.array([1e-5, 2.0, 1.0, 1e-6]))
    assert p.sigma.tolist() == [2.0, 1.0, 1e-5, 1e-6]
    assert p.numerical_rank() == 2 and p.counts_below(1e-3) == 2
    cert = p.decay_certificate()
    assert cert["rank"] == 2 and cert["gap_ok"] and cert["tail_below_tol"]
    assert cert["gap_ratio"] == pytest.approx(1e5)


def test_export_formats(tmp_path):
    g = HalfLine(1.0, 2)
    e = np.array([[1 + 2j, 3 - 4j], [5.5, -1j]])
    A = OperatorMatrix(e, g, g)
    A.tofile(tmp_path / "a.bin")
    raw = np.fromfile(tmp_path / "a.bin", dtype="<f8")
    assert raw.tolist() == [1, 2, 3, -4, 5.5, 0, 0, -1]
    A.to_csv(tmp_path / "a.csv")
    rows = np.loadtxt(tmp_path / "a.csv", delimiter=",")
    assert np.array_equal(rows[:, 0::2] + 1j * rows[:, 1::2], e)


def test_multiplier_lower_bound_unimodular_on_l2(line):
    l2 = Orlicz(PowerDensity(2.0, 2.0))
    tests = [GridFunction.from_callable(lambda x, s=s: np.exp(-(x - s) ** 2), line) for s in (-2, 0, 3)]
    assert multiplier_norm_lower_bound(Rational(2), line, l2, tests) == pytest.approx(1.0, abs=1e-10)
    assert multiplier_norm_lower_bound(Constant(3.0), line, l2, tests) == pytest.approx(3.0)
