"""Dense discretizations of Fourier convolutions, Wiener-Hopf operators and
the Cauchy singular integral.

Conventions
-----------
The Fourier transform is ``(Ff)(xi) = int f(x) exp(+i xi x) dx``.  On a
:class:`~whlab.grids.Line` grid with ``M`` cells of width ``h`` the
convolution ``W0(a) = F^{-1} a F`` is the circulant matrix diagonalized by
the DFT, with the symbol sampled at ``xi_k = -2 pi fftfreq(M, h)``.  The
Nyquist bin cannot tell ``+pi/h`` from ``-pi/h`` and takes ``a(inf)``.

``W(a) = r_+ W0(a) l_+`` embeds the half-line cells into a line grid of
``2 * oversample`` times their extent, so the periodic wrap-around is pushed
``oversample`` half-line lengths away.

The Riesz projection is ``P_+ = W0(chi_{xi<0})`` and ``S = 2 P_+ - I``
(``S = W0(-sgn)``); functions analytic in the upper half-plane are fixed by
``S``.  The sign is pinned by the kernel test ``W(r_{-1}) psi_0 = 0``.
"""

from __future__ import annotations

import warnings
from dataclasses import dataclass, field
from typing import Callable, Sequence

import numpy as np
import scipy.linalg

from whlab.errors import AliasWarning, SingularPoint
from whlab.grids import Circle, Grid, HalfLine, Line
from whlab.spaces import GridFunction, SpaceSpec
from whlab.symbol import Symbol, conjugate, mobius_pullback, simplify_product


@dataclass(frozen=True, eq=False)
class OperatorMatrix:
    """Dense matrix acting from ``domain`` grid functions to ``range`` grid functions."""

    entries: np.ndarray
    domain: Grid | Circle
    range: Grid | Circle
    label: str = ""

    def __post_init__(self):
        e = np.asarray(self.entries, dtype=complex)
        if e.shape != (self.range.n, self.domain.n):
            raise ValueError(f"matrix shape {e.shape} does not match grids ({self.range.n}, {self.domain.n})")
        if not np.all(np.isfinite(e)):
            raise ValueError("operator entries must be finite")
        object.__setattr__(self, "entries", e)

    @property
    def shape(self):
        return self.entries.shape

    def __matmul__(self, other):
        if isinstance(other, OperatorMatrix):
            if other.range != self.domain:
                raise ValueError("cannot compose operators on mismatched grids")
            return OperatorMatrix(self.entries @ other.entries, other.domain, self.range,
                                  f"({self.label})({other.label})")
        if isinstance(other, GridFunction):
            return GridFunction(self.range, self.entries @ other.samples)
        return self.entries @ np.asarray(other)

    def _check_same(self, other):
        if other.domain != self.domain or other.range != self.range:
            raise ValueError("operators act on different grids")

    def __add__(self, other: "OperatorMatrix"):
        self._check_same(other)
        return OperatorMatrix(self.entries + other.entries, self.domain, self.range,
                              f"{self.label} + {other.label}")

    def __sub__(self, other: "OperatorMatrix"):
        self._check_same(other)
        return OperatorMatrix(self.entries - other.entries, self.domain, self.range,
                              f"{self.label} - {other.label}")

    def __mul__(self, c):
        return OperatorMatrix(self.entries * c, self.domain, self.range, f"{c}*{self.label}")

    __rmul__ = __mul__

    def norm(self) -> float:
        """Spectral norm (the discrete L2 operator norm)."""
        return spectral_norm(self.entries)

    def singular_values(self) -> np.ndarray:
        return scipy.linalg.svdvals(self.entries)

    def profile(self) -> "SingularValueProfile":
        return SingularValueProfile(self.singular_values())

    def tofile(self, path) -> None:
        """Row-major little-endian complex128 (re, im pairs of float64)."""
        np.ascontiguousarray(self.entries).astype("<c16").tofile(path)

    def to_csv(self, path) -> None:
        """One line per row: ``re_0,im_0,re_1,im_1,...``."""
        e = self.entries
        inter = np.empty((e.shape[0], 2 * e.shape[1]))
        inter[:, 0::2] = e.real
        inter[:, 1::2] = e.imag
        np.savetxt(path, inter, delimiter=",", fmt="%.17g")


def spectral_norm(a: np.ndarray) -> float:
    """Largest singular value, from the top eigenvalue of the smaller Gram matrix.

    ARPACK stalls when the top singular values cluster, which is the usual
    case for discretized Toeplitz-like operators.
    """
    a = np.asarray(a)
    if min(a.shape) == 0:
        return 0.0
    g = a.conj().T @ a if a.shape[1] <= a.shape[0] else a @ a.conj().T
    top = scipy.linalg.eigh(g, eigvals_only=True, subset_by_index=[g.shape[0] - 1, g.shape[0] - 1])
    return float(np.sqrt(max(top[0], 0.0)))


@dataclass(frozen=True)
class SingularValueProfile:
    sigma: np.ndarray

    def __post_init__(self):
        s = np.sort(np.abs(np.asarray(self.sigma, dtype=float)))[::-1]
        object.__setattr__(self, "sigma", s)

    @property
    def sigma_max(self) -> float:
        return float(self.sigma[0]) if self.sigma.size else 0.0

    def counts_below(self, tol: float) -> int:
        return int(np.count_nonzero(self.sigma < tol))

    def numerical_rank(self, rel: float = 1e-3) -> int:
        return int(np.count_nonzero(self.sigma >= rel * self.sigma_max))

    def decay_certificate(self, rel: float = 1e-3, gap: float = 10.0) -> dict:
        r = self.numerical_rank(rel)
        tail = self.sigma[r:]
        last = self.sigma[r - 1] if r > 0 else np.inf
        first_tail = tail[0] if tail.size else 0.0
        return {
            "rank": r,
            "tail_below_tol": bool(np.all(tail < rel * self.sigma_max)),
            "gap_ratio": float(last / first_tail) if first_tail > 0 else float("inf"),
            "gap_ok": bool(first_tail == 0 or last / first_tail >= gap),
        }


# ---------------------------------------------------------------------------
# Fourier convolutions


SCHEMES = ("bilinear", "collocation")


def warped_frequencies(grid: Line) -> np.ndarray:
    """``(2/h) tan(xi h / 2)`` at the DFT frequencies; the Nyquist bin maps to infinity."""
    theta = grid.frequencies() * grid.h
    out = np.empty(theta.size)
    nyq = np.isclose(np.abs(theta), np.pi, rtol=0, atol=1e-12)
    out[~nyq] = 2.0 / grid.h * np.tan(theta[~nyq] / 2.0)
    out[nyq] = np.inf
    return out


def symbol_on_frequencies(a: Symbol, grid: Line, warn: bool = True) -> np.ndarray:
    """Point samples of ``a`` in FFT bin order; the Nyquist bin takes ``a(inf)``."""
    d = np.asarray(a(grid.frequencies()), dtype=complex)
    if grid.n % 2 == 0:
        d[grid.n // 2] = a.value_at_infinity
    if warn:
        _alias_check(a, grid)
    return d


def multiplier(a: Symbol, grid: Line, scheme: str = "bilinear", warn: bool = True) -> np.ndarray:
    """Eigenvalues of the circulant discretizing ``W0(a)``, in FFT bin order.

    ``"bilinear"`` samples ``a`` at the warped frequencies
    ``(2/h) tan(xi h / 2)``: the discrete symbol is continuous across the
    Nyquist bin and rational in ``exp(i xi h)`` when ``a`` is rational, so
    semi-commutators of rational symbols keep their exact finite rank.
    ``"collocation"`` samples ``a`` at the frequencies themselves.
    """
    if scheme == "collocation":
        return symbol_on_frequencies(a, grid, warn)
    if scheme != "bilinear":
        raise ValueError(f"unknown scheme {scheme!r}; expected one of {SCHEMES}")
    if warn:
        _alias_check(a, grid)
    return np.asarray(a(warped_frequencies(grid)), dtype=complex)


def _alias_check(a: Symbol, grid: Line) -> None:
    """Warn when neighbouring frequency samples of ``a`` differ by a sizeable
    fraction of ``max |a|``, or when ``a`` moves that much between two
    breakpoints closer than the spacing (a spike the samples can miss)."""
    xi = np.sort(grid.frequencies())[1:]  # drop the Nyquist bin
    d = np.asarray(a(xi), dtype=complex)
    scale = max(float(np.max(np.abs(d))), 1e-300)
    dxi = float(xi[1] - xi[0])
    bp = a.breakpoints()
    bp = bp[np.abs(bp) < xi[-1]]
    tight = False
    if bp.size > 1:
        close = np.diff(bp) < dxi
        if close.any():
            jump = np.abs(np.diff(np.asarray(a(bp), dtype=complex)))
            tight = bool(np.any(jump[close] > 0.25 * scale))
    if np.max(np.abs(np.diff(d))) > 0.75 * scale or tight:
        warnings.warn(
            f"symbol is under-resolved by the frequency spacing {dxi:.3g}", AliasWarning, stacklevel=4
        )


def circulant_column(a: Symbol, grid: Line, scheme: str = "bilinear", warn: bool = True) -> np.ndarray:
    return np.fft.ifft(multiplier(a, grid, scheme, warn))


def _circulant_block(col: np.ndarray, rows: np.ndarray, cols: np.ndarray) -> np.ndarray:
    return col[(rows[:, None] - cols[None, :]) % col.size]


def fourier_convolution(a: Symbol, grid: Line, scheme: str = "bilinear") -> OperatorMatrix:
    """``W0(a)`` on a line grid."""
    col = circulant_column(a, grid, scheme)
    idx = np.arange(grid.n)
    return OperatorMatrix(_circulant_block(col, idx, idx), grid, grid, f"W0({_name(a)})")


def apply_fourier_convolution(a: Symbol, grid: Line, samples: np.ndarray,
                              scheme: str = "bilinear") -> np.ndarray:
    d = multiplier(a, grid, scheme, warn=False)
    s = np.asarray(samples, dtype=complex)
    d = d.reshape((-1,) + (1,) * (s.ndim - 1))
    return np.fft.ifft(d * np.fft.fft(s, axis=0), axis=0)


def embedding_line(grid: HalfLine, oversample: int = 2, range_grid: HalfLine | None = None) -> Line:
    """Line grid of ``2 * oversample`` times the (larger) half-line extent."""
    if oversample < 1:
        raise ValueError("oversample must be >= 1")
    rg = range_grid or grid
    if not np.isclose(rg.h, grid.h, rtol=1e-12):
        raise ValueError("domain and range grids must share the cell width")
    n = max(grid.n, rg.n)
    return Line(oversample * n * grid.h, 2 * oversample * n)


def wiener_hopf(a: Symbol, grid: HalfLine, oversample: int = 2,
                range_grid: HalfLine | None = None, scheme: str = "bilinear") -> OperatorMatrix:
    """``W(a) = r_+ W0(a) l_+``; a longer ``range_grid`` gives a rectangular matrix.

    Grid functions are sampled at cell midpoints.
    """
    rg = range_grid or grid
    line = embedding_line(grid, oversample, rg)
    col = circulant_column(a, line, scheme)
    entries = _circulant_block(col, np.arange(rg.n), np.arange(grid.n))
    return OperatorMatrix(entries, grid, rg, f"W({_name(a)})")


def apply_wiener_hopf(a: Symbol, grid: HalfLine, samples: np.ndarray, oversample: int = 2,
                      scheme: str = "bilinear") -> np.ndarray:
    """``W(a) f`` by FFT; ``samples`` may hold several functions as columns."""
    line = embedding_line(grid, oversample)
    s = np.asarray(samples, dtype=complex)
    ext = np.zeros((line.n,) + s.shape[1:], dtype=complex)
    ext[: grid.n] = s  # half-line cells first; the line is periodic
    out = apply_fourier_convolution(a, line, ext, scheme)
    return out[: grid.n]


def zero_extension(grid: HalfLine, line: Line) -> OperatorMatrix:
    """``l_+``: half-line cells into the nonnegative cells of the line."""
    e = np.zeros((line.n, grid.n))
    e[line.n // 2 + np.arange(grid.n), np.arange(grid.n)] = 1.0
    return OperatorMatrix(e, grid, line, "l+")


def restriction(line: Line, grid: HalfLine) -> OperatorMatrix:
    """``r_+``: restrict line functions to the half-line cells."""
    return adjoint(zero_extension(grid, line))


def riesz_projection(grid: Line) -> OperatorMatrix:
    xi = grid.frequencies()
    mult = (xi <= 0).astype(float)
    col = np.fft.ifft(mult)
    idx = np.arange(grid.n)
    return OperatorMatrix(_circulant_block(col, idx, idx), grid, grid, "P+")


def cauchy_singular_line(grid: Line) -> OperatorMatrix:
    """``S_R = 2 P_+ - I``."""
    p = riesz_projection(grid)
    return OperatorMatrix(2.0 * p.entries - np.eye(grid.n), grid, grid, "S_R")


def apply_cauchy_singular_line(grid: Line, samples: np.ndarray) -> np.ndarray:
    xi = grid.frequencies()
    sign = np.where(xi <= 0, 1.0, -1.0)
    return np.fft.ifft(sign * np.fft.fft(samples, axis=0), axis=0)


def cauchy_singular_circle(grid: Circle) -> OperatorMatrix:
    """``S_T``: ``t**k -> t**k`` for ``k >= 0`` and ``-t**k`` for ``k < 0``."""
    k = np.fft.fftfreq(grid.n, 1.0 / grid.n)
    sign = np.where(k >= 0, 1.0, -1.0)
    col = np.fft.ifft(sign)
    idx = np.arange(grid.n)
    return OperatorMatrix(_circulant_block(col, idx, idx), grid, grid, "S_T")


# ---------------------------------------------------------------------------
# the circle transfer


def mobius_to_line(f, x, p: float = 2.0) -> np.ndarray:
    """``(Bf)(x) = 2**(1-1/p) / (x + i) * f((x - i)/(x + i))``.

    ``f`` is a callable on circle points, or the array of its values at the
    matched points ``t = (x - i)/(x + i)``.
    """
    x = np.asarray(x, dtype=float)
    if np.any(np.isinf(x)):
        raise SingularPoint("x = inf corresponds to t = 1")
    vals = f((x - 1j) / (x + 1j)) if callable(f) else np.asarray(f, dtype=complex)
    return 2.0 ** (1.0 - 1.0 / p) / (x + 1j) * vals


def mobius_to_circle(g, t, p: float = 2.0) -> np.ndarray:
    """``(B^{-1} g)(t) = i 2**(1/p) / (1 - t) * g(i (1 + t)/(1 - t))``.

    ``g`` is a callable on the line or the array of its values at the
    matched points ``x = i (1 + t)/(1 - t)``.
    """
    t = np.asarray(t, dtype=complex)
    if np.any(np.abs(1 - t) < 1e-300):
        raise SingularPoint("t = 1 maps to infinity")
    x = (1j * (1 + t) / (1 - t)).real
    vals = g(x) if callable(g) else np.asarray(g, dtype=complex)
    return 1j * 2.0 ** (1.0 / p) / (1 - t) * vals


mobius_transform = mobius_to_line
inverse_mobius_transform = mobius_to_circle


def mobius_isometry_gap(f, circle: Circle, line: Line, p: float = 2.0) -> float:
    """Relative gap between ``||f||_{L^p(T, w_p)}`` and ``||Bf||_{L^p(R)}``.

    ``w_p(t) = |t - 1|**(1 - 2/p)``.  The circle side uses the trapezoidal
    rule on ``circle``, the line side the midpoint rule on ``line``; the
    window truncation dominates unless ``f`` vanishes at ``t = 1``.
    """
    t = circle.points()
    with np.errstate(divide="ignore", invalid="ignore"):
        w = np.abs(t - 1) ** (1.0 - 2.0 / p)
        dens = np.abs(f(t) * w) ** p
    circ = (2 * np.pi / circle.n * float(np.sum(np.nan_to_num(dens)))) ** (1.0 / p)
    x = line.midpoints()
    lin = (line.h * float(np.sum(np.abs(mobius_to_line(f, x, p)) ** p))) ** (1.0 / p)
    return abs(lin - circ) / circ


def circle_conjugation_residual(coeffs: dict[int, complex], grid: Line) -> float:
    """Relative L2 gap between ``S_R B f`` and ``B S_T f`` on the central half of ``grid``.

    ``f = sum_k coeffs[k] t**k`` is a trigonometric polynomial; ``S_T f`` is
    exact from its coefficients and ``S_R`` is the spectral line operator.
    Pick ``f`` with ``f(1) = 0`` so ``Bf`` decays fast enough for the window.
    """
    x = grid.midpoints()

    def f(t):
        return sum(c * t**k for k, c in coeffs.items())

    def sf(t):
        return sum((c if k >= 0 else -c) * t**k for k, c in coeffs.items())

    g = mobius_to_line(f, x)
    lhs = apply_cauchy_singular_line(grid, g)
    rhs = mobius_to_line(sf, x)
    core = np.abs(x) < grid.half_width / 2
    return float(np.linalg.norm((lhs - rhs)[core]) / np.linalg.norm(rhs[core]))


# ---------------------------------------------------------------------------
# Toeplitz sections through the circle


def toeplitz_section(a: Symbol, n: int, oversample: int = 8) -> OperatorMatrix:
    """``T_n`` with ``(j, k)`` entry equal to the Fourier coefficient ``(B0 a)_{j-k}``."""
    m = max(oversample * n, 1024)
    theta = 2.0 * np.pi * np.arange(m) / m
    coef = np.fft.fft(mobius_pullback(a, theta)) / m
    k = np.fft.fftfreq(m, 1.0 / m)
    tail = np.abs(coef[np.abs(k) >= n])
    if tail.size and tail.max() > 1e-12 * max(1.0, float(np.abs(coef).max())):
        warnings.warn(
            f"Fourier coefficients of B0 a are {tail.max():.2e} beyond frequency {n}", AliasWarning, stacklevel=2
        )
    idx = np.arange(n)
    entries = coef[(idx[:, None] - idx[None, :]) % m]
    g = Circle(n)
    return OperatorMatrix(entries, g, g, f"T_{n}({_name(a)})")


# ---------------------------------------------------------------------------
# identities


def adjoint(A: OperatorMatrix) -> OperatorMatrix:
    """Conjugate transpose with respect to the discrete L2 pairing."""
    return OperatorMatrix(A.entries.conj().T, A.range, A.domain, f"({A.label})*")


def semi_commutator(a: Symbol, b: Symbol, grid: HalfLine, oversample: int = 2,
                    scheme: str = "bilinear") -> OperatorMatrix:
    """``W(a) W(b) - W(ab)``."""
    wa = wiener_hopf(a, grid, oversample, scheme=scheme)
    wb = wiener_hopf(b, grid, oversample, scheme=scheme)
    wab = wiener_hopf(simplify_product([a, b]), grid, oversample, scheme=scheme)
    out = wa @ wb - wab
    return OperatorMatrix(out.entries, grid, grid, f"W({_name(a)})W({_name(b)}) - W(ab)")


@dataclass(frozen=True, eq=False)
class SemiCommutatorIdentity:
    lhs: np.ndarray
    rhs: np.ndarray
    lhs_norm: float
    rhs_norm: float
    difference_norm: float

    @property
    def relative_gap(self) -> float:
        return self.difference_norm / max(self.lhs_norm, 1e-300)


def semi_commutator_identity(a: Symbol, b: Symbol, grid: HalfLine,
                             scheme: str = "bilinear") -> SemiCommutatorIdentity:
    """Both sides of ``l_+ (W(a)W(b) - W(ab)) r_+ = 1/4 F^{-1} [aI, S][bI, S] P_+ F``.

    The half-line is the whole nonnegative half of the line ``[-L, L)``.
    The left side uses the circulant (FFT) discretization; the right side is
    assembled from the explicit matrix ``exp(i xi_k x_j)`` of the discrete
    Fourier transform, with ``S = 2 P_+ - I`` acting on functions of ``xi``
    and ``P_+ = F chi_+ F^{-1}`` written as the frequency-side convolution
    by the indicator of the negative half-axis.
    """
    line = embedding_line(grid, 1)
    m = line.n
    wa = wiener_hopf(a, grid, 1, scheme=scheme).entries
    wb = wiener_hopf(b, grid, 1, scheme=scheme).entries
    wab = wiener_hopf(simplify_product([a, b]), grid, 1, scheme=scheme).entries
    lhs = np.zeros((m, m), dtype=complex)
    pos = line.positive_slice()
    lhs[pos, pos] = wa @ wb - wab

    x = line.midpoints()
    xi = line.frequencies()
    E = np.exp(1j * np.outer(xi, x))
    da = multiplier(a, line, scheme, warn=False)
    db = multiplier(b, line, scheme, warn=False)
    # frequency-side P_+: transform in xi with dual variable x, keep x < 0
    neg = (x < 0).astype(float)
    p_plus = (E.conj() * neg[None, :]) @ E.T / m
    s = 2.0 * p_plus - np.eye(m)
    ca = da[:, None] * s - s * da[None, :]
    cb = db[:, None] * s - s * db[None, :]
    inner = (ca @ cb) @ p_plus
    # F = h E, F^{-1} = (dxi / 2 pi) E^H, and h * dxi / (2 pi) = 1 / m
    rhs = 0.25 * (E.conj().T @ inner @ E) / m
    return SemiCommutatorIdentity(lhs, rhs, spectral_norm(lhs), spectral_norm(rhs), spectral_norm(lhs - rhs))


@dataclass(frozen=True)
class CompactnessEvidence:
    grids: tuple
    profiles: tuple
    ranks: tuple
    leading: tuple

    @property
    def stable_rank(self) -> bool:
        return len(set(self.ranks)) == 1

    @property
    def tails_decay(self) -> bool:
        """Every profile has a nonempty tail, below tolerance and behind a gap."""
        certs = [(p, p.decay_certificate()) for p in self.profiles]
        return all(c["rank"] < p.sigma.size and c["tail_below_tol"] and c["gap_ok"] for p, c in certs)

    def leading_drift(self) -> float:
        """Largest relative change of the leading singular values between refinements."""
        r = min(self.ranks) if self.ranks else 0
        if r == 0 or len(self.leading) < 2:
            return 0.0
        lead = np.array([l[:r] for l in self.leading])
        return float(np.max(np.abs(np.diff(lead, axis=0)) / lead[:-1]))

    def plateau_fraction(self, level: float = 0.5) -> tuple[float, ...]:
        """Fraction of singular values above ``level * sigma_max`` at each refinement."""
        return tuple(float(np.mean(p.sigma >= level * p.sigma_max)) for p in self.profiles)


def compactness_evidence(build: Callable[[HalfLine], OperatorMatrix], grids: Sequence[HalfLine],
                         rel: float = 1e-3, keep: int = 16) -> CompactnessEvidence:
    """Singular-value profiles of the same operator on successively finer grids.

    Compact operators show a numerical rank and leading singular values that
    do not move with refinement; a non-compact reference keeps a plateau.
    """
    profiles = tuple(build(g).profile() for g in grids)
    ranks = tuple(p.numerical_rank(rel) for p in profiles)
    leading = tuple(p.sigma[:keep].copy() for p in profiles)
    return CompactnessEvidence(tuple(grids), profiles, ranks, leading)


def multiplier_norm_lower_bound(a: Symbol, grid: Line, space: SpaceSpec,
                                tests: Sequence[GridFunction]) -> float:
    """``max ||W0(a) f||_X / ||f||_X`` over the test functions.

    A lower bound for the multiplier norm of ``a`` on ``X``; the upper
    bound constant is unknown, so nothing is asserted about it.
    """
    best = 0.0
    for f in tests:
        g = GridFunction(grid, apply_fourier_convolution(a, grid, f.samples))
        best = max(best, space.norm(g) / space.norm(f))
    return best


def _name(a: Symbol) -> str:
    from whlab.symbol import Constant, Rational

    if isinstance(a, Rational):
        return f"r_{a.n}"
    if isinstance(a, Constant):
        return f"{a.c:g}"
    return type(a).__name__
