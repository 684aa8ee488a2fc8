"""Lorentz, Orlicz and variable-exponent Lebesgue norms of grid functions.

Grid functions are piecewise constant on uniform cells, so distribution
functions, rearrangements and modulars reduce to finite sums.  The only
integral that is not a finite sum is the Lorentz ``dt/t`` integral, which is
done per cell by Gauss-Legendre on a smooth integrand plus a closed-form tail.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable, Sequence

import numpy as np

from whlab.errors import BracketFailure, DivergentTail, SchemaError, Unsupported
from whlab.grids import Grid, HalfLine, Line, grid_from_dict

_GL_NODES, _GL_WEIGHTS = np.polynomial.legendre.leggauss(32)


@dataclass(frozen=True, eq=False)
class GridFunction:
    domain: Grid
    samples: np.ndarray

    def __post_init__(self):
        s = np.asarray(self.samples, dtype=complex).ravel()
        if s.size != self.domain.n:
            raise ValueError(f"expected {self.domain.n} samples, got {s.size}")
        if not np.all(np.isfinite(s)):
            raise ValueError("samples must be finite")
        s.setflags(write=False)
        object.__setattr__(self, "samples", s)

    @classmethod
    def from_callable(cls, f: Callable[[np.ndarray], np.ndarray], domain: Grid) -> "GridFunction":
        """Sample ``f`` at the cell midpoints."""
        return cls(domain, f(domain.midpoints()))

    @classmethod
    def indicator(cls, a: float, b: float, domain: Grid, value: complex = 1.0) -> "GridFunction":
        x = domain.midpoints()
        return cls(domain, np.where((x > a) & (x < b), value, 0.0))

    @property
    def h(self) -> float:
        return self.domain.h

    @property
    def abs(self) -> np.ndarray:
        return np.abs(self.samples)

    def l1(self) -> float:
        return self.h * float(np.sum(self.abs))

    def lp(self, p: float) -> float:
        return (self.h * float(np.sum(self.abs ** p))) ** (1.0 / p)

    def sup(self) -> float:
        return float(np.max(self.abs))

    def __mul__(self, c):
        return GridFunction(self.domain, self.samples * c)

    __rmul__ = __mul__

    def __add__(self, other: "GridFunction"):
        if other.domain != self.domain:
            raise ValueError("grid functions live on different grids")
        return GridFunction(self.domain, self.samples + other.samples)


# ---------------------------------------------------------------------------
# rearrangements


def distribution_function(f: GridFunction, lam: float) -> float:
    """Measure of ``{|f| > lam}``."""
    if lam < 0:
        raise ValueError("lambda must be nonnegative")
    return f.h * int(np.count_nonzero(f.abs > lam))


def decreasing_rearrangement(f: GridFunction) -> GridFunction:
    """Nonincreasing rearrangement of ``|f|`` on ``[0, extent)`` with the same cells."""
    s = np.sort(f.abs)[::-1]
    return GridFunction(HalfLine(f.domain.extent, f.domain.n), s)


def _prefix_mass(fstar: np.ndarray, h: float) -> np.ndarray:
    return np.concatenate([[0.0], np.cumsum(fstar) * h])


def double_star(f: GridFunction, t: float) -> float:
    """``(1/t) * integral_0^t f*(s) ds``."""
    if not t > 0:
        raise ValueError("t must be positive")
    fs = decreasing_rearrangement(f).samples.real
    h = f.h
    mass = _prefix_mass(fs, h)
    k = int(min(t // h, fs.size))
    partial = mass[k] + (fs[k] * (t - k * h) if k < fs.size else 0.0)
    return float(partial / t)


def lorentz_norm(f: GridFunction, p: float, q: float) -> float:
    """``(int_0^inf (t**(1/p) f**(t))**q dt/t)**(1/q)``.

    On cell ``k`` of the rearrangement ``f**(t) = (m_k + v_k (t - t_k)) / t``;
    past the support ``f**(t) = ||f||_1 / t`` and the tail integrates in
    closed form.
    """
    if not (1 < p < math.inf and 1 < q < math.inf):
        raise DivergentTail("Lorentz parameters must satisfy 1 < p, q < inf")
    fs = decreasing_rearrangement(f).samples.real
    support = int(np.count_nonzero(fs))
    if support == 0:
        return 0.0
    h = f.h
    fs = fs[:support]
    mass = _prefix_mass(fs, h)
    gamma = q / p - 1.0 - q  # exponent of t after pulling out the numerator
    # first cell: f** is constant there, integral of t**(q/p - 1)
    total = fs[0] ** q * h ** (q / p) / (q / p)
    if support > 1:
        k = np.arange(1, support)
        tk = k * h
        t = tk[:, None] + 0.5 * h * (1.0 + _GL_NODES[None, :])
        num = mass[k][:, None] + fs[k][:, None] * (t - tk[:, None])
        total += float(np.sum(0.5 * h * _GL_WEIGHTS[None, :] * num ** q * t ** gamma))
    T = support * h
    total += mass[-1] ** q * T ** (gamma + 1.0) / -(gamma + 1.0)
    return float(total ** (1.0 / q))


# ---------------------------------------------------------------------------
# Luxemburg norms


def _luxemburg(modular: Callable[[float], float], scale_hint: float,
               rtol: float, max_iter: int) -> float:
    """Smallest ``lam`` with ``modular(lam) <= 1`` for a decreasing modular."""
    hi = scale_hint
    for _ in range(2000):
        if modular(hi) <= 1.0:
            break
        hi *= 2.0
    else:
        raise BracketFailure("modular stays above 1 for every tested lambda")
    lo = hi / 2.0
    for _ in range(2000):
        if modular(lo) > 1.0:
            break
        hi, lo = lo, lo / 2.0
    else:
        raise BracketFailure("modular stays below 1 for every tested lambda")
    for _ in range(max_iter):
        mid = 0.5 * (lo + hi)
        if modular(mid) > 1.0:
            lo = mid
        else:
            hi = mid
        if hi - lo <= rtol * hi:
            break
    return 0.5 * (lo + hi)


@dataclass(frozen=True)
class PowerDensity:
    """Density ``phi(t) = scale * t**(p-1)``, so ``Phi(x) = scale * x**p / p``."""

    p: float
    scale: float = 1.0

    def __post_init__(self):
        if not self.p > 1:
            raise ValueError("power density needs p > 1")
        if not self.scale > 0:
            raise ValueError("scale must be positive")

    def Phi(self, x: np.ndarray) -> np.ndarray:
        return self.scale * np.asarray(x, dtype=float) ** self.p / self.p

    def phi(self, x: np.ndarray) -> np.ndarray:
        return self.scale * np.asarray(x, dtype=float) ** (self.p - 1.0)


@dataclass(frozen=True)
class TabulatedDensity:
    """Left-continuous step density: ``values[i]`` on ``(breakpoints[i], breakpoints[i+1]]``.

    ``breakpoints[0]`` must be 0 and the last value holds on the unbounded
    final piece; it must be positive so that ``Phi(inf) = inf``.
    """

    breakpoints: tuple[float, ...]
    values: tuple[float, ...]

    def __post_init__(self):
        b = np.asarray(self.breakpoints, dtype=float)
        v = np.asarray(self.values, dtype=float)
        if b.size != v.size or b.size == 0:
            raise ValueError("breakpoints and values must be non-empty and equally long")
        if b[0] != 0 or np.any(np.diff(b) <= 0):
            raise ValueError("breakpoints must start at 0 and increase strictly")
        if np.any(v < 0) or np.any(np.diff(v) < 0) or v[-1] <= 0:
            raise ValueError("density must be nonnegative, nondecreasing and eventually positive")
        object.__setattr__(self, "breakpoints", tuple(b.tolist()))
        object.__setattr__(self, "values", tuple(v.tolist()))

    def phi(self, x):
        b = np.asarray(self.breakpoints)
        v = np.asarray(self.values)
        x = np.asarray(x, dtype=float)
        idx = np.clip(np.searchsorted(b, x, side="left") - 1, 0, None)
        return np.where(x > 0, v[idx], 0.0)

    def Phi(self, x):
        b = np.asarray(self.breakpoints)
        v = np.asarray(self.values)
        cum = np.concatenate([[0.0], np.cumsum(v[:-1] * np.diff(b))])
        x = np.asarray(x, dtype=float)
        idx = np.clip(np.searchsorted(b, x, side="right") - 1, 0, None)
        return cum[idx] + v[idx] * (x - b[idx])


YoungFunction = PowerDensity | TabulatedDensity


def orlicz_norm(f: GridFunction, young: YoungFunction, rtol: float = 1e-13,
                max_iter: int = 200) -> float:
    """Luxemburg norm ``inf{lam > 0 : int Phi(|f|/lam) <= 1}`` by bisection."""
    a = f.abs
    nz = a[a > 0]
    if nz.size == 0:
        return 0.0
    h = f.h

    def modular(lam):
        return h * float(np.sum(young.Phi(nz / lam)))

    return _luxemburg(modular, max(float(nz.max()), h * float(nz.sum())), rtol, max_iter)


@dataclass(frozen=True)
class VariableExponent:
    """Piecewise-constant exponent: ``values[i]`` on ``[breakpoints[i], breakpoints[i+1])``.

    ``values`` has one more entry than ``breakpoints``; the first holds on
    ``(-inf, breakpoints[0])`` and the last on ``[breakpoints[-1], inf)`` (the
    tail exponent).  A callable may be supplied instead through ``func``.
    """

    breakpoints: tuple[float, ...] = ()
    values: tuple[float, ...] = (2.0,)
    func: Callable[[np.ndarray], np.ndarray] | None = None

    def __post_init__(self):
        if self.func is None and len(self.values) != len(self.breakpoints) + 1:
            raise ValueError("need exactly one more exponent value than breakpoints")
        if self.func is None:
            v = np.asarray(self.values, dtype=float)
            if not (v.min() > 1 and v.max() < math.inf):
                raise ValueError("exponents must satisfy 1 < p_- <= p_+ < inf")

    def __call__(self, x) -> np.ndarray:
        x = np.asarray(x, dtype=float)
        if self.func is not None:
            return np.broadcast_to(np.asarray(self.func(x), dtype=float), x.shape)
        idx = np.searchsorted(np.asarray(self.breakpoints, dtype=float), x, side="right")
        return np.asarray(self.values, dtype=float)[idx]

    def bounds_on(self, grid: Grid) -> tuple[float, float]:
        p = self(grid.midpoints())
        return float(p.min()), float(p.max())


def variable_lebesgue_norm(f: GridFunction, exponent: VariableExponent, rtol: float = 1e-13,
                           max_iter: int = 200) -> float:
    """Luxemburg norm for the modular ``int |f(x)/lam|**p(x) dx``."""
    p = exponent(f.domain.midpoints())
    if not (p.min() > 1 and np.all(np.isfinite(p))):
        raise ValueError("exponent must satisfy 1 < p_- <= p_+ < inf on the grid")
    a = f.abs
    mask = a > 0
    if not mask.any():
        return 0.0
    a, p = a[mask], p[mask]
    h = f.h

    def modular(lam):
        return h * float(np.sum((a / lam) ** p))

    return _luxemburg(modular, max(float(a.max()), h * float(a.sum())), rtol, max_iter)


def maximal_operator(f: GridFunction, block: int = 512) -> GridFunction:
    """Discrete Hardy-Littlewood maximal function over cell-aligned intervals.

    For cell ``i`` this is the largest mean of ``|f|`` over cells ``l..r`` with
    ``l <= i <= r``.  Half-line functions are extended by zero to the left, so
    intervals never need to cross 0 to beat an interval starting at 0.
    """
    a = f.abs
    n = a.size
    csum = np.concatenate([[0.0], np.cumsum(a)])
    out = np.zeros(n)
    r = np.arange(n)
    for l0 in range(0, n, block):
        ls = np.arange(l0, min(l0 + block, n))
        width = r[None, :] - ls[:, None] + 1
        with np.errstate(divide="ignore", invalid="ignore"):
            avg = (csum[r[None, :] + 1] - csum[ls[:, None]]) / width
        avg[width <= 0] = -np.inf
        # best[l, i] = max over r >= i of avg[l, r]
        best = np.maximum.accumulate(avg[:, ::-1], axis=1)[:, ::-1]
        # only cells i >= l are covered by intervals starting at l
        best[r[None, :] < ls[:, None]] = -np.inf
        out = np.maximum(out, best.max(axis=0))
    return GridFunction(f.domain, out)


def maximal_ratio(f: GridFunction, exponent: VariableExponent) -> float:
    """``||Mf|| / ||f||`` in the variable Lebesgue norm; a finite-sample diagnostic only."""
    return variable_lebesgue_norm(maximal_operator(f), exponent) / variable_lebesgue_norm(f, exponent)


# ---------------------------------------------------------------------------
# space descriptions


@dataclass(frozen=True)
class Lorentz:
    p: float
    q: float

    def __post_init__(self):
        if not (1 < self.p < math.inf and 1 < self.q < math.inf):
            raise ValueError("Lorentz space needs 1 < p, q < inf")

    def norm(self, f: GridFunction) -> float:
        return lorentz_norm(f, self.p, self.q)


@dataclass(frozen=True)
class Orlicz:
    young: YoungFunction

    def norm(self, f: GridFunction) -> float:
        return orlicz_norm(f, self.young)


@dataclass(frozen=True)
class VariableLebesgue:
    exponent: VariableExponent

    def norm(self, f: GridFunction) -> float:
        return variable_lebesgue_norm(f, self.exponent)


SpaceSpec = Lorentz | Orlicz | VariableLebesgue


@dataclass(frozen=True)
class BoydIndices:
    alpha: float
    beta: float

    def __post_init__(self):
        if not 0 <= self.alpha <= self.beta <= 1:
            raise ValueError("Boyd indices must satisfy 0 <= alpha <= beta <= 1")

    @property
    def nontrivial(self) -> bool:
        return 0 < self.alpha and self.beta < 1


def boyd_indices(space: SpaceSpec) -> BoydIndices:
    """Closed-form Boyd indices.

    Lorentz ``L^{p,q}`` and power Orlicz spaces give ``(1/p, 1/p)``; for a
    variable exponent the envelope ``[1/p_+, 1/p_-]`` of the tabulated values
    is returned.
    """
    if isinstance(space, Lorentz):
        return BoydIndices(1.0 / space.p, 1.0 / space.p)
    if isinstance(space, Orlicz):
        if isinstance(space.young, PowerDensity):
            return BoydIndices(1.0 / space.young.p, 1.0 / space.young.p)
        raise Unsupported("Boyd indices of tabulated Young functions are not computed")
    if isinstance(space, VariableLebesgue):
        if space.exponent.func is not None:
            raise Unsupported("exponent envelope needs tabulated values")
        v = np.asarray(space.exponent.values, dtype=float)
        return BoydIndices(1.0 / float(v.max()), 1.0 / float(v.min()))
    raise Unsupported(f"unknown space {space!r}")


def space_from_dict(d, path: str = "space") -> SpaceSpec:
    """``{"space": "lorentz", "p", "q"}``, ``{"space": "orlicz", "phi": {"power": p[, "scale": s]}``
    or ``{"breakpoints", "values"}}``, ``{"space": "variable", "exponent": {"breakpoints", "values"}}``.
    """
    if not isinstance(d, dict):
        raise SchemaError("space must be an object", path)
    kind = d.get("space")
    try:
        if kind == "lorentz":
            return Lorentz(float(d["p"]), float(d["q"]))
        if kind == "orlicz":
            phi = d["phi"]
            if "power" in phi:
                return Orlicz(PowerDensity(float(phi["power"]), float(phi.get("scale", 1.0))))
            return Orlicz(TabulatedDensity(tuple(phi["breakpoints"]), tuple(phi["values"])))
        if kind == "variable":
            e = d["exponent"]
            return VariableLebesgue(VariableExponent(tuple(e.get("breakpoints", ())), tuple(e["values"])))
    except KeyError as exc:
        raise SchemaError(f"missing field {exc.args[0]!r}", path) from None
    except (TypeError, ValueError) as exc:
        raise SchemaError(str(exc), path) from None
    raise SchemaError(f"unknown space {kind!r}", f"{path}.space")


def function_from_dict(d, path: str = "function") -> GridFunction:
    """``{"domain": grid, "pieces": [{"interval": [a, b], "value": v}, ...]}`` or ``"samples"``."""
    if not isinstance(d, dict):
        raise SchemaError("function must be an object", path)
    try:
        domain = grid_from_dict(d["domain"])
        if "samples" in d:
            return GridFunction(domain, np.asarray(d["samples"], dtype=complex))
        samples = np.zeros(domain.n, dtype=complex)
        for i, piece in enumerate(d["pieces"]):
            a, b = piece["interval"]
            v = piece["value"]
            v = complex(*v) if isinstance(v, list) else complex(v)
            x = domain.midpoints()
            samples[(x > a) & (x < b)] += v
        return GridFunction(domain, samples)
    except KeyError as exc:
        raise SchemaError(f"missing field {exc.args[0]!r}", path) from None
    except (TypeError, ValueError) as exc:
        raise SchemaError(str(exc), path) from None


def norm(f: GridFunction, space: SpaceSpec) -> float:
    return space.norm(f)
