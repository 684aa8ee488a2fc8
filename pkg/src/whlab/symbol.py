"""Closed-form symbols on the one-point compactified real line.

A symbol is an immutable tree of nodes (constants, piecewise-linear functions,
the rational family ``r_n(xi) = ((xi - i)/(xi + i))**n``, sums, products,
scalings, reciprocals, conjugates and real powers).  Every node evaluates
vectorised on arrays of ``xi`` (``+-inf`` maps to the value at infinity) and
knows its own derivative, so variation, sup-norm, ellipticity margin and
winding number are all computed from the closed form rather than from a fixed
sampling.

Curves are swept through the compactification ``xi = tan(theta / 2)``,
``theta`` in ``[-pi, pi]``, so the point at infinity is the ordinary sample
``theta = +-pi``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Iterable, Sequence

import numpy as np
from scipy.optimize import minimize_scalar

from whlab.errors import (
    InfiniteVariation,
    LogBranchFailure,
    NonClosing,
    NonElliptic,
    SchemaError,
)

ELLIPTIC_TOL = 1e-9
_GL_NODES, _GL_WEIGHTS = np.polynomial.legendre.leggauss(20)


def xi_of_theta(theta) -> np.ndarray:
    """Map ``theta`` in ``[-pi, pi]`` to the extended line; ``+-pi`` goes to ``inf``."""
    theta = np.asarray(theta, dtype=float)
    xi = np.tan(theta / 2.0)
    return np.where(np.abs(theta) >= np.pi, np.inf, xi)


def theta_of_xi(xi) -> np.ndarray:
    xi = np.asarray(xi, dtype=float)
    return np.where(np.isinf(xi), np.pi, 2.0 * np.arctan(xi))


def _as_symbol(x) -> "Symbol":
    if isinstance(x, Symbol):
        return x
    if isinstance(x, (int, float, complex, np.number)):
        return Constant(complex(x))
    raise TypeError(f"cannot interpret {type(x).__name__} as a symbol")


class Symbol:
    """Base class of the symbol tree.

    Subclasses implement ``_eval(x, right)`` for finite ``x`` (``right=True``
    asks for right-hand limits at breakpoints), ``_deriv(x)``,
    ``_limit_at_infinity()`` and ``breakpoints()``.
    """

    def __post_init__(self):
        object.__setattr__(self, "_inf", complex(self._limit_at_infinity()))

    @property
    def value_at_infinity(self) -> complex:
        return self._inf

    def __call__(self, xi, right: bool = False):
        x = np.asarray(xi, dtype=float)
        out = np.empty(x.shape, dtype=complex)
        inf = np.isinf(x)
        out[inf] = self._inf
        if (~inf).any():
            out[~inf] = self._eval(x[~inf], right)
        return out[()] if out.ndim == 0 else out

    def derivative(self, xi) -> np.ndarray:
        x = np.asarray(xi, dtype=float)
        out = np.zeros(x.shape, dtype=complex)
        fin = ~np.isinf(x)
        if fin.any():
            out[fin] = self._deriv(x[fin])
        return out[()] if out.ndim == 0 else out

    def breakpoints(self) -> np.ndarray:
        """Finite points where the symbol may fail to be continuously differentiable."""
        return np.empty(0)

    @property
    def continuous(self) -> bool:
        """Whether the symbol is continuous on the compactified line."""
        return True

    def _eval(self, x: np.ndarray, right: bool) -> np.ndarray:
        raise NotImplementedError

    def _deriv(self, x: np.ndarray) -> np.ndarray:
        raise NotImplementedError

    def _limit_at_infinity(self) -> complex:
        raise NotImplementedError

    def __add__(self, other):
        return Sum((self, _as_symbol(other)))

    __radd__ = __add__

    def __sub__(self, other):
        return Sum((self, Scaled(_as_symbol(other), -1.0)))

    def __rsub__(self, other):
        return Sum((_as_symbol(other), Scaled(self, -1.0)))

    def __neg__(self):
        return Scaled(self, -1.0)

    def __mul__(self, other):
        if isinstance(other, Symbol):
            return Product((self, other))
        return Scaled(self, complex(other))

    __rmul__ = __mul__


@dataclass(frozen=True)
class Constant(Symbol):
    c: complex

    def _eval(self, x, right):
        return np.full(x.shape, complex(self.c))

    def _deriv(self, x):
        return np.zeros(x.shape, dtype=complex)

    def _limit_at_infinity(self):
        return self.c


@dataclass(frozen=True)
class Rational(Symbol):
    """``r_n(xi) = ((xi - i) / (xi + i))**n``, unimodular on the real line."""

    n: int

    def __post_init__(self):
        if int(self.n) != self.n:
            raise ValueError("Rational needs an integer exponent")
        object.__setattr__(self, "n", int(self.n))
        super().__post_init__()

    def _eval(self, x, right):
        return ((x - 1j) / (x + 1j)) ** self.n

    def _deriv(self, x):
        return self.n * self._eval(x, False) * 2j / (x * x + 1.0)

    def _limit_at_infinity(self):
        return 1.0


@dataclass(frozen=True, eq=False)
class PLData:
    """Piecewise-linear function in the normal form

    ``c0`` on ``(-inf, x_1]``, ``c_k + d_k xi`` on ``(x_k, x_{k+1}]`` and
    ``d0`` on ``(x_n, inf)``.  ``coefficients[k-1] = (c_k, d_k)``.
    """

    vertices: np.ndarray
    left_value: complex
    right_value: complex
    coefficients: np.ndarray
    continuous_on_Rdot: bool = field(init=False)

    def __post_init__(self):
        v = np.asarray(self.vertices, dtype=float).ravel()
        coef = np.asarray(self.coefficients, dtype=complex).reshape(-1, 2)
        if v.size == 0:
            raise ValueError("at least one vertex is required")
        if np.any(np.diff(v) <= 0) or not np.all(np.isfinite(v)):
            raise ValueError("vertices must be finite and strictly increasing")
        if coef.shape[0] != v.size - 1:
            raise ValueError(f"expected {v.size - 1} segment coefficient pairs, got {coef.shape[0]}")
        v.setflags(write=False)
        coef.setflags(write=False)
        object.__setattr__(self, "vertices", v)
        object.__setattr__(self, "coefficients", coef)
        object.__setattr__(self, "left_value", complex(self.left_value))
        object.__setattr__(self, "right_value", complex(self.right_value))
        left, right = self.one_sided_vertex_values()
        scale = max(1.0, float(np.max(np.abs(np.concatenate([left, right])))))
        ok = np.all(np.abs(left - right) <= 1e-12 * scale)
        ok = ok and abs(self.left_value - self.right_value) <= 1e-12 * scale
        object.__setattr__(self, "continuous_on_Rdot", bool(ok))

    @classmethod
    def from_values(cls, vertices, values, left=None, right=None) -> "PLData":
        """Continuous interpolant through ``(vertices[k], values[k])``.

        The tails default to the first and last values.
        """
        v = np.asarray(vertices, dtype=float)
        y = np.asarray(values, dtype=complex)
        if v.shape != y.shape:
            raise ValueError("vertices and values must have the same length")
        slope = np.diff(y) / np.diff(v)
        coef = np.column_stack([y[:-1] - slope * v[:-1], slope])
        return cls(
            v,
            y[0] if left is None else left,
            y[-1] if right is None else right,
            coef,
        )

    def one_sided_vertex_values(self) -> tuple[np.ndarray, np.ndarray]:
        """Left and right limits at every vertex."""
        v, coef = self.vertices, self.coefficients
        seg = coef[:, 0] + coef[:, 1] * v[:-1] if len(coef) else np.empty(0)
        seg_end = coef[:, 0] + coef[:, 1] * v[1:] if len(coef) else np.empty(0)
        left = np.concatenate([[self.left_value], seg_end])
        right = np.concatenate([seg, [self.right_value]])
        return left, right

    def evaluate(self, x: np.ndarray, right: bool = False) -> np.ndarray:
        v, coef = self.vertices, self.coefficients
        idx = np.searchsorted(v, x, side="right" if right else "left")
        out = np.empty(x.shape, dtype=complex)
        lo = idx == 0
        hi = idx == v.size
        mid = ~(lo | hi)
        out[lo] = self.left_value
        out[hi] = self.right_value
        k = idx[mid] - 1
        out[mid] = coef[k, 0] + coef[k, 1] * x[mid]
        return out

    def slope(self, x: np.ndarray) -> np.ndarray:
        v, coef = self.vertices, self.coefficients
        idx = np.searchsorted(v, x, side="left")
        out = np.zeros(x.shape, dtype=complex)
        mid = (idx > 0) & (idx < v.size)
        out[mid] = coef[idx[mid] - 1, 1]
        return out

    def variation(self) -> float:
        """Exact total variation: segment increments plus jumps at vertices."""
        v, coef = self.vertices, self.coefficients
        left, right = self.one_sided_vertex_values()
        seg = float(np.sum(np.abs(coef[:, 1]) * np.diff(v))) if len(coef) else 0.0
        return seg + float(np.sum(np.abs(right - left)))

    def __eq__(self, other):
        if not isinstance(other, PLData):
            return NotImplemented
        return (
            np.array_equal(self.vertices, other.vertices)
            and np.array_equal(self.coefficients, other.coefficients)
            and self.left_value == other.left_value
            and self.right_value == other.right_value
        )

    __hash__ = None


@dataclass(frozen=True, eq=False)
class PiecewiseLinear(Symbol):
    pl: PLData

    def _eval(self, x, right):
        return self.pl.evaluate(x, right)

    def _deriv(self, x):
        return self.pl.slope(x)

    def _limit_at_infinity(self):
        # two-sided limit only exists when the tails agree
        return self.pl.right_value

    def breakpoints(self):
        return self.pl.vertices

    @property
    def continuous(self):
        return self.pl.continuous_on_Rdot

    def __eq__(self, other):
        return isinstance(other, PiecewiseLinear) and self.pl == other.pl

    __hash__ = None


def _union_breakpoints(parts: Iterable[Symbol]) -> np.ndarray:
    arrays = [p.breakpoints() for p in parts]
    arrays = [a for a in arrays if a.size]
    if not arrays:
        return np.empty(0)
    return np.unique(np.concatenate(arrays))


@dataclass(frozen=True)
class Sum(Symbol):
    parts: tuple

    def __post_init__(self):
        flat = []
        for p in self.parts:
            p = _as_symbol(p)
            flat.extend(p.parts if isinstance(p, Sum) else [p])
        object.__setattr__(self, "parts", tuple(flat))
        super().__post_init__()

    def _eval(self, x, right):
        return sum(p._eval(x, right) for p in self.parts)

    def _deriv(self, x):
        return sum(p._deriv(x) for p in self.parts)

    def _limit_at_infinity(self):
        return sum(p.value_at_infinity for p in self.parts)

    def breakpoints(self):
        return _union_breakpoints(self.parts)

    @property
    def continuous(self):
        return all(p.continuous for p in self.parts)


@dataclass(frozen=True)
class Product(Symbol):
    parts: tuple

    def __post_init__(self):
        flat = []
        for p in self.parts:
            p = _as_symbol(p)
            flat.extend(p.parts if isinstance(p, Product) else [p])
        object.__setattr__(self, "parts", tuple(flat))
        super().__post_init__()

    def _eval(self, x, right):
        out = np.ones(x.shape, dtype=complex)
        for p in self.parts:
            out = out * p._eval(x, right)
        return out

    def _deriv(self, x):
        vals = [p._eval(x, False) for p in self.parts]
        total = np.zeros(x.shape, dtype=complex)
        for i, p in enumerate(self.parts):
            term = p._deriv(x)
            for j, v in enumerate(vals):
                if j != i:
                    term = term * v
            total = total + term
        return total

    def _limit_at_infinity(self):
        return math.prod((p.value_at_infinity for p in self.parts), start=1.0 + 0j)

    def breakpoints(self):
        return _union_breakpoints(self.parts)

    @property
    def continuous(self):
        return all(p.continuous for p in self.parts)


@dataclass(frozen=True)
class Scaled(Symbol):
    s: Symbol
    c: complex

    def __post_init__(self):
        object.__setattr__(self, "c", complex(self.c))
        super().__post_init__()

    def _eval(self, x, right):
        return self.c * self.s._eval(x, right)

    def _deriv(self, x):
        return self.c * self.s._deriv(x)

    def _limit_at_infinity(self):
        return self.c * self.s.value_at_infinity

    def breakpoints(self):
        return self.s.breakpoints()

    @property
    def continuous(self):
        return self.s.continuous


@dataclass(frozen=True)
class Reciprocal(Symbol):
    """Pointwise ``1 / s``; build through :func:`invert`, which checks ellipticity."""

    s: Symbol

    def _eval(self, x, right):
        return 1.0 / self.s._eval(x, right)

    def _deriv(self, x):
        v = self.s._eval(x, False)
        return -self.s._deriv(x) / (v * v)

    def _limit_at_infinity(self):
        return 1.0 / self.s.value_at_infinity

    def breakpoints(self):
        return self.s.breakpoints()

    @property
    def continuous(self):
        return self.s.continuous


@dataclass(frozen=True)
class Conjugate(Symbol):
    s: Symbol

    def _eval(self, x, right):
        return np.conj(self.s._eval(x, right))

    def _deriv(self, x):
        return np.conj(self.s._deriv(x))

    def _limit_at_infinity(self):
        return np.conj(self.s.value_at_infinity)

    def breakpoints(self):
        return self.s.breakpoints()

    @property
    def continuous(self):
        return self.s.continuous


@dataclass(frozen=True, eq=False)
class Power(Symbol):
    """``base**t`` along the continuous logarithm of ``base``.

    The branch is fixed to the principal one at infinity and continued along
    the curve; this requires ``base`` elliptic with winding number zero.
    """

    base: Symbol
    t: float
    _theta: np.ndarray = field(init=False, repr=False)
    _arg: np.ndarray = field(init=False, repr=False)

    def __post_init__(self):
        t = float(self.t)
        if not 0.0 <= t <= 1.0:
            raise ValueError("power exponent must lie in [0, 1]")
        object.__setattr__(self, "t", t)
        theta, z, dphi = _track_argument(self.base, max_step=np.pi / 8)
        turns = dphi.sum() / (2 * np.pi)
        if abs(turns) > 0.5:
            raise LogBranchFailure(f"base winds {turns:.3f} times; no continuous logarithm")
        phi0 = float(np.angle(z[0]))
        arg = phi0 + np.concatenate([[0.0], np.cumsum(dphi)])
        object.__setattr__(self, "_theta", theta)
        object.__setattr__(self, "_arg", arg)
        super().__post_init__()

    def log(self, xi, right: bool = False) -> np.ndarray:
        """Continuous logarithm of the base."""
        x = np.asarray(xi, dtype=float)
        v = self.base(x, right)
        ref = np.interp(theta_of_xi(x), self._theta, self._arg)
        principal = np.angle(v)
        k = np.round((ref - principal) / (2 * np.pi))
        return np.log(np.abs(v)) + 1j * (principal + 2 * np.pi * k)

    def _eval(self, x, right):
        return np.exp(self.t * self.log(x, right))

    def _deriv(self, x):
        if self.t == 0.0:
            return np.zeros(x.shape, dtype=complex)
        return self.t * np.exp((self.t - 1.0) * self.log(x)) * self.base._deriv(x)

    def _limit_at_infinity(self):
        return np.exp(self.t * complex(self.log(np.inf)))

    def breakpoints(self):
        return self.base.breakpoints()

    @property
    def continuous(self):
        return self.base.continuous


# ---------------------------------------------------------------------------
# sampling helpers


def _theta_grid(a: Symbol, n: int) -> np.ndarray:
    theta = np.linspace(-np.pi, np.pi, n + 1)
    bp = a.breakpoints()
    if bp.size:
        theta = np.union1d(theta, 2.0 * np.arctan(bp))
    return theta


def _track_argument(a: Symbol, n0: int = 1024, max_step: float = np.pi / 2,
                    cap: int = 2**22, tol: float = ELLIPTIC_TOL):
    """Sample the closed curve a(tan(theta/2)) until argument steps are small.

    Returns ``theta, values, dphi`` with ``dphi[j]`` the principal argument
    increment between consecutive samples.
    """
    n = n0
    while True:
        theta = _theta_grid(a, n)
        z = a(xi_of_theta(theta))
        mag = np.abs(z)
        j = int(np.argmin(mag))
        if mag[j] <= tol:
            raise NonElliptic(float(mag[j]), float(xi_of_theta(theta[j])))
        dphi = np.angle(z[1:] / z[:-1])
        if np.max(np.abs(dphi)) < max_step:
            return theta, z, dphi
        if n >= cap:
            raise LogBranchFailure(
                f"argument step {np.max(np.abs(dphi)):.3f} still >= {max_step:.3f} at {n} samples"
            )
        n *= 2


def _local_extremum(a: Symbol, kind: str, n: int = 4096, candidates: int = 8) -> tuple[float, float]:
    """Min or max of |a| over the compactified line, with local polishing."""
    theta = _theta_grid(a, n)
    mag = np.abs(a(xi_of_theta(theta)))
    sign = 1.0 if kind == "min" else -1.0
    order = np.argsort(sign * mag)[:candidates]
    best_val = sign * mag[order[0]]
    best_theta = theta[order[0]]

    def f(th):
        return sign * float(np.abs(a(xi_of_theta(th))))

    for j in order:
        lo = theta[max(j - 1, 0)]
        hi = theta[min(j + 1, theta.size - 1)]
        if hi <= lo:
            continue
        res = minimize_scalar(f, bounds=(lo, hi), method="bounded", options={"xatol": 1e-14})
        if res.fun < best_val:
            best_val, best_theta = float(res.fun), float(res.x)
    return sign * best_val, float(xi_of_theta(best_theta))


# ---------------------------------------------------------------------------
# operations


def evaluate(a: Symbol, xi) -> complex | np.ndarray:
    """``a(xi)``; ``xi = +-inf`` gives the value at infinity."""
    return a(xi)


def _abs_derivative_integral(a: Symbol, rtol: float = 1e-11) -> float:
    """Integral of |a'| over the line, computed in the compactified variable."""
    bounds = _theta_grid(a, 0)
    bounds = np.unique(np.concatenate([[-np.pi, np.pi], bounds]))
    lengths = np.diff(bounds)
    bounds = bounds[:-1][lengths > 0]
    lengths = lengths[lengths > 0]

    def integrate(m: int) -> float:
        # nodes: piece p, subinterval s, GL node g
        step = lengths / m
        starts = bounds[:, None] + step[:, None] * np.arange(m)[None, :]
        th = starts[:, :, None] + step[:, None, None] * 0.5 * (1.0 + _GL_NODES[None, None, :])
        w = step[:, None, None] * 0.5 * _GL_WEIGHTS[None, None, :]
        th = th.ravel()
        xi = np.tan(th / 2.0)
        g = np.abs(a.derivative(xi)) * (1.0 + xi * xi) / 2.0
        return float(np.sum(g * np.broadcast_to(w, (lengths.size, m, _GL_NODES.size)).ravel()))

    m = 4
    prev = integrate(m)
    while True:
        m *= 2
        cur = integrate(m)
        if not np.isfinite(cur):
            return math.inf
        if abs(cur - prev) <= rtol * max(1.0, abs(cur)):
            return cur
        if m * lengths.size > 2**20:
            return cur
        prev = cur


def variation(a: Symbol) -> float:
    """Total variation over the real line.

    Piecewise-linear symbols are telescoped exactly; everything else integrates
    ``|a'|`` between breakpoints and adds the jumps at breakpoints.
    """
    if isinstance(a, Constant):
        return 0.0
    if isinstance(a, PiecewiseLinear):
        return a.pl.variation()
    if isinstance(a, Scaled):
        return abs(a.c) * variation(a.s)
    total = _abs_derivative_integral(a)
    if not a.continuous:
        bp = a.breakpoints()
        total += float(np.sum(np.abs(a(bp, right=True) - a(bp))))
    if not np.isfinite(total):
        return math.inf
    return total


def sup_norm(a: Symbol) -> float:
    if isinstance(a, Constant):
        return abs(a.c)
    if isinstance(a, Rational):
        return 1.0
    return _local_extremum(a, "max")[0]


def bv_norm(a: Symbol) -> float:
    """``sup |a| + V(a)``."""
    v = variation(a)
    if not np.isfinite(v):
        return math.inf
    return sup_norm(a) + v


def ellipticity_margin(a: Symbol, grid: Sequence[float] | None = None) -> float:
    """Minimum of ``|a|`` over ``grid`` plus the point at infinity.

    Without a grid, the compactified line is sampled adaptively and the
    smallest samples are polished by local minimization.
    """
    if grid is None:
        return min(_local_extremum(a, "min")[0], abs(a.value_at_infinity))
    pts = np.append(np.asarray(grid, dtype=float).ravel(), np.inf)
    return float(np.min(np.abs(a(pts))))


def argmin_modulus(a: Symbol) -> float:
    """Location of the smallest ``|a(xi)|`` (may be ``inf``)."""
    val, xi = _local_extremum(a, "min")
    return xi


def is_elliptic(a: Symbol, tol: float = ELLIPTIC_TOL) -> bool:
    return ellipticity_margin(a) > tol


def winding_number(a: Symbol, n0: int = 1024, max_step: float = np.pi / 2,
                   tol: float = ELLIPTIC_TOL) -> int:
    """Number of counter-clockwise turns of ``a`` around 0 as xi runs over the line."""
    margin = ellipticity_margin(a)
    if margin <= tol:
        raise NonElliptic(margin, argmin_modulus(a))
    _, _, dphi = _track_argument(a, n0=n0, max_step=max_step, tol=tol)
    turns = dphi.sum() / (2 * np.pi)
    k = round(turns)
    if abs(turns - k) > 1e-6:
        raise NonClosing(f"accumulated argument is {turns:.6f} turns")
    return int(k)


def conjugate(a: Symbol) -> Symbol:
    """Pointwise complex conjugate; ``conj(r_n) = r_{-n}`` on the real line."""
    if isinstance(a, Constant):
        return Constant(np.conj(a.c))
    if isinstance(a, Rational):
        return Rational(-a.n)
    if isinstance(a, Scaled):
        return Scaled(conjugate(a.s), np.conj(a.c))
    if isinstance(a, Product):
        return Product(tuple(conjugate(p) for p in a.parts))
    if isinstance(a, Sum):
        return Sum(tuple(conjugate(p) for p in a.parts))
    if isinstance(a, PiecewiseLinear):
        pl = a.pl
        return PiecewiseLinear(PLData(pl.vertices, np.conj(pl.left_value),
                                      np.conj(pl.right_value), np.conj(pl.coefficients)))
    return Conjugate(a)


def simplify_product(parts: Iterable[Symbol]) -> Symbol:
    """Multiply factors, merging rational exponents and scalar constants."""
    n = 0
    c = 1.0 + 0j
    rest = []
    for p in parts:
        p = _as_symbol(p)
        stack = list(p.parts) if isinstance(p, Product) else [p]
        for q in stack:
            while isinstance(q, Scaled):
                c *= q.c
                q = q.s
            if isinstance(q, Rational):
                n += q.n
            elif isinstance(q, Constant):
                c *= q.c
            else:
                rest.append(q)
    factors = ([Rational(n)] if n else []) + rest
    if not factors:
        return Constant(c)
    sym = factors[0] if len(factors) == 1 else Product(tuple(factors))
    return sym if c == 1 else Scaled(sym, c)


def invert(a: Symbol, grid: Sequence[float] | None = None, tol: float = ELLIPTIC_TOL) -> Symbol:
    """Pointwise reciprocal of an elliptic symbol.

    Exact identities are used where available (``1/r_n = r_{-n}``, constants,
    products, scalings); otherwise a :class:`Reciprocal` node is returned.
    """
    margin = ellipticity_margin(a, grid)
    if margin <= tol:
        raise NonElliptic(margin)
    return _invert(a)


def _invert(a: Symbol) -> Symbol:
    if isinstance(a, Constant):
        return Constant(1.0 / a.c)
    if isinstance(a, Rational):
        return Rational(-a.n)
    if isinstance(a, Scaled):
        return Scaled(_invert(a.s), 1.0 / a.c)
    if isinstance(a, Product):
        return Product(tuple(_invert(p) for p in a.parts))
    if isinstance(a, Reciprocal):
        return a.s
    return Reciprocal(a)


@dataclass(frozen=True)
class InverseBound:
    variation_inverse: float
    variation: float
    infimum: float
    bound: float

    @property
    def holds(self) -> bool:
        return self.variation_inverse <= self.bound * (1 + 1e-9) + 1e-12


def inverse_variation_bound(a: Symbol) -> InverseBound:
    """Compare ``V(1/a)`` with ``V(a) / inf|a|**2``."""
    inv = invert(a)
    va = variation(a)
    m = ellipticity_margin(a)
    return InverseBound(variation(inv), va, m, va / m**2)


@dataclass(frozen=True)
class PLApproximation:
    pl: PLData
    mesh: float
    window: float
    sup_error: float
    variation: float
    target_variation: float

    @property
    def symbol(self) -> PiecewiseLinear:
        return PiecewiseLinear(self.pl)


def pl_approximate(b: Symbol, mesh: float = 1 / 16, window: float | None = None) -> PLApproximation:
    """Continuous piecewise-linear interpolant of ``b``.

    Nodes are spaced ``mesh`` apart on ``[-window, window]``; the two outer
    nodes take the value ``b(inf)`` so the interpolant is constant ``b(inf)``
    outside the window and stays continuous on the compactified line.  The
    default window is ``4 / mesh`` (64 at the default mesh), so refining the
    mesh also pushes the window out and the sup-error keeps shrinking.
    The sup-error is measured on a grid four times finer than the nodes.
    """
    if not mesh > 0:
        raise ValueError("mesh must be positive")
    if not b.continuous:
        raise ValueError("b must be continuous on the compactified line")
    vb = variation(b)
    if not np.isfinite(vb):
        raise InfiniteVariation("cannot approximate a symbol of unbounded variation")
    if window is None:
        window = 4.0 / mesh
    k = int(round(window / mesh))
    nodes = mesh * np.arange(-k, k + 1)
    values = b(nodes)
    values[0] = values[-1] = b.value_at_infinity
    pl = PLData.from_values(nodes, values, b.value_at_infinity, b.value_at_infinity)
    fine = np.linspace(nodes[0], nodes[-1], 4 * (nodes.size - 1) + 1)
    err = float(np.max(np.abs(b(fine) - pl.evaluate(fine))))
    # outside the window the error is |b - b(inf)|, largest next to the window
    err = max(err, float(np.max(np.abs(b(np.array([nodes[0], nodes[-1]])) - b.value_at_infinity))))
    return PLApproximation(pl, mesh, float(window), err, pl.variation(), vb)


def mobius_pullback(a: Symbol, theta) -> complex | np.ndarray:
    """``(B0 a)(t) = a(i (1 + t) / (1 - t))`` at ``t = exp(i theta)``; ``a(inf)`` at ``t = 1``.

    On the circle the argument ``i(1+t)/(1-t)`` equals ``-cot(theta/2)``.
    """
    th = np.asarray(theta, dtype=float)
    red = np.mod(th, 2 * np.pi)
    at_one = (red == 0) | np.isclose(red, 2 * np.pi, rtol=0, atol=1e-15)
    with np.errstate(divide="ignore"):
        xi = -1.0 / np.tan(red / 2.0)
    xi = np.where(at_one, np.inf, xi)
    return a(xi)


# ---------------------------------------------------------------------------
# homotopy to the rational representative


def homotopy(b: Symbol, t: float, kappa: int | None = None) -> Symbol:
    """``h_t = (r_{-kappa} b)**t * r_kappa`` with ``kappa = wind(b)``."""
    if kappa is None:
        kappa = winding_number(b)
    f = simplify_product([Rational(-kappa), b])
    return simplify_product([Power(f, t), Rational(kappa)])


@dataclass(frozen=True)
class HomotopyTrace:
    kappa: int
    t_samples: tuple[float, ...]
    margins: tuple[float, ...]
    sup_distance: tuple[float, ...]
    bv_distance: tuple[float, ...]
    t0: float
    power_variation: tuple[float, ...]
    variation_bound: tuple[float, ...]
    endpoint_error_start: float
    endpoint_error_end: float

    @property
    def variation_bound_holds(self) -> tuple[bool, ...]:
        return tuple(v <= bnd * (1 + 1e-8) + 1e-10
                     for v, bnd in zip(self.power_variation, self.variation_bound))


def homotopy_trace(b: Symbol, t_samples: Sequence[float], t0: float = 0.0,
                   n_check: int = 20001) -> HomotopyTrace:
    """Sample the homotopy at ``t_samples`` and record its diagnostics.

    Per sample: the ellipticity margin of ``h_t``; sup and BV distances to
    ``h_{t0}``; the variation of ``(r_{-kappa} b)**t`` next to the bound
    ``t V(r_{-kappa} b) / inf|b|**(1 - t)``.  Endpoint errors are measured
    on ``n_check`` points of the compactified line.
    """
    kappa = winding_number(b)
    f = simplify_product([Rational(-kappa), b])
    vf = variation(f)
    inf_b = ellipticity_margin(b)
    ref = homotopy(b, t0, kappa)
    margins, sup_d, bv_d, pv, bounds = [], [], [], [], []
    for t in t_samples:
        h = homotopy(b, t, kappa)
        margins.append(ellipticity_margin(h))
        diff = Sum((h, Scaled(ref, -1.0)))
        s = sup_norm(diff) if t != t0 else 0.0
        sup_d.append(s)
        bv_d.append(s + variation(diff) if t != t0 else 0.0)
        pv.append(variation(Power(f, t)))
        bounds.append(t * vf / inf_b ** (1.0 - t))
    xi = xi_of_theta(np.linspace(-np.pi, np.pi, n_check))
    e0 = float(np.max(np.abs(homotopy(b, 0.0, kappa)(xi) - Rational(kappa)(xi))))
    e1 = float(np.max(np.abs(homotopy(b, 1.0, kappa)(xi) - b(xi))))
    return HomotopyTrace(kappa, tuple(float(t) for t in t_samples), tuple(margins),
                         tuple(sup_d), tuple(bv_d), float(t0), tuple(pv), tuple(bounds), e0, e1)


# ---------------------------------------------------------------------------
# schema


def _cplx(v, path: str) -> complex:
    if isinstance(v, (int, float)):
        return complex(v)
    if isinstance(v, (list, tuple)) and len(v) == 2 and all(isinstance(u, (int, float)) for u in v):
        return complex(v[0], v[1])
    raise SchemaError("expected a number or a [re, im] pair", path)


def _pair(z: complex) -> list[float]:
    return [float(z.real), float(z.imag)]


def symbol_from_dict(d, path: str = "symbol") -> Symbol:
    """Build a symbol from its tagged-tree description.

    Nodes: ``{"kind": "const", "value": c}``, ``{"kind": "rational", "n": n}``,
    ``{"kind": "pl", "vertices": [...], "values": [...]}`` or with
    ``"left"``, ``"right"``, ``"coefficients": [[c_k, d_k], ...]``,
    ``{"kind": "sum"|"product", "parts": [...]}``,
    ``{"kind": "scaled", "symbol": node, "c": c}``,
    ``{"kind": "power", "base": node, "t": t}``.  Complex numbers are
    ``[re, im]`` pairs or plain reals.
    """
    if not isinstance(d, dict):
        raise SchemaError("symbol node must be an object", path)
    kind = d.get("kind")
    try:
        if kind == "const":
            return Constant(_cplx(d["value"], f"{path}.value"))
        if kind == "rational":
            n = d["n"]
            if not isinstance(n, int):
                raise SchemaError("n must be an integer", f"{path}.n")
            return Rational(n)
        if kind == "pl":
            vertices = d["vertices"]
            if "values" in d:
                values = [_cplx(v, f"{path}.values[{i}]") for i, v in enumerate(d["values"])]
                left = _cplx(d["left"], f"{path}.left") if "left" in d else None
                right = _cplx(d["right"], f"{path}.right") if "right" in d else None
                return PiecewiseLinear(PLData.from_values(vertices, values, left, right))
            coef = [[_cplx(c, f"{path}.coefficients[{i}][0]"), _cplx(s, f"{path}.coefficients[{i}][1]")]
                    for i, (c, s) in enumerate(d["coefficients"])]
            return PiecewiseLinear(PLData(vertices, _cplx(d["left"], f"{path}.left"),
                                          _cplx(d["right"], f"{path}.right"),
                                          np.array(coef, dtype=complex).reshape(-1, 2)))
        if kind in ("sum", "product"):
            parts = d["parts"]
            if not isinstance(parts, list) or not parts:
                raise SchemaError("parts must be a non-empty list", f"{path}.parts")
            built = tuple(symbol_from_dict(p, f"{path}.parts[{i}]") for i, p in enumerate(parts))
            return Sum(built) if kind == "sum" else Product(built)
        if kind == "scaled":
            return Scaled(symbol_from_dict(d["symbol"], f"{path}.symbol"), _cplx(d["c"], f"{path}.c"))
        if kind == "power":
            return Power(symbol_from_dict(d["base"], f"{path}.base"), float(d["t"]))
    except KeyError as exc:
        raise SchemaError(f"missing field {exc.args[0]!r}", path) from None
    except (ValueError, TypeError) as exc:
        if isinstance(exc, SchemaError):
            raise
        raise SchemaError(str(exc), path) from None
    raise SchemaError(f"unknown symbol kind {kind!r}", f"{path}.kind")


def symbol_to_dict(a: Symbol) -> dict:
    if isinstance(a, Constant):
        return {"kind": "const", "value": _pair(complex(a.c))}
    if isinstance(a, Rational):
        return {"kind": "rational", "n": a.n}
    if isinstance(a, PiecewiseLinear):
        pl = a.pl
        return {"kind": "pl", "vertices": pl.vertices.tolist(), "left": _pair(pl.left_value),
                "right": _pair(pl.right_value),
                "coefficients": [[_pair(c), _pair(s)] for c, s in pl.coefficients]}
    if isinstance(a, (Sum, Product)):
        return {"kind": "sum" if isinstance(a, Sum) else "product",
                "parts": [symbol_to_dict(p) for p in a.parts]}
    if isinstance(a, Scaled):
        return {"kind": "scaled", "symbol": symbol_to_dict(a.s), "c": _pair(a.c)}
    if isinstance(a, Power):
        return {"kind": "power", "base": symbol_to_dict(a.base), "t": a.t}
    raise SchemaError(f"{type(a).__name__} has no serialized form")
