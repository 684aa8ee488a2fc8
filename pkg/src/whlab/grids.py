"""Uniform cell grids on the half-line and on a symmetric window of the line.

Functions on a grid are piecewise constant: sample ``j`` is the value on cell
``j`` and is taken at the cell midpoint.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np


@dataclass(frozen=True)
class HalfLine:
    """Cells of width ``length / n`` covering ``[0, length)``."""

    length: float
    n: int

    def __post_init__(self):
        if self.n < 2:
            raise ValueError("a grid needs at least two cells")
        if not self.length > 0:
            raise ValueError("length must be positive")

    @property
    def h(self) -> float:
        return self.length / self.n

    @property
    def extent(self) -> float:
        return self.length

    @property
    def start(self) -> float:
        return 0.0

    def midpoints(self) -> np.ndarray:
        return (np.arange(self.n) + 0.5) * self.h

    def describe(self) -> dict:
        return {"type": "half_line", "length": self.length, "n": self.n}


@dataclass(frozen=True)
class Line:
    """Cells of width ``2 * half_width / n`` covering ``[-half_width, half_width)``.

    ``n`` is even so that the cell boundary at 0 separates the two half-axes
    and the midpoints are symmetric under ``x -> -x``.
    """

    half_width: float
    n: int

    def __post_init__(self):
        if self.n < 2 or self.n % 2:
            raise ValueError("a line grid needs an even number (>= 2) of cells")
        if not self.half_width > 0:
            raise ValueError("half_width must be positive")

    @property
    def h(self) -> float:
        return 2.0 * self.half_width / self.n

    @property
    def extent(self) -> float:
        return 2.0 * self.half_width

    @property
    def start(self) -> float:
        return -self.half_width

    def midpoints(self) -> np.ndarray:
        return -self.half_width + (np.arange(self.n) + 0.5) * self.h

    def frequencies(self) -> np.ndarray:
        """Frequencies xi_k (FFT bin order) dual to the grid under exp(+i xi x)."""
        return -2.0 * np.pi * np.fft.fftfreq(self.n, self.h)

    def positive_slice(self) -> slice:
        return slice(self.n // 2, self.n)

    def describe(self) -> dict:
        return {"type": "line", "half_width": self.half_width, "n": self.n}


Grid = HalfLine | Line


def grid_from_dict(d: dict) -> Grid:
    kind = d.get("type")
    if kind == "half_line":
        return HalfLine(float(d["length"]), int(d["n"]))
    if kind == "line":
        return Line(float(d["half_width"]), int(d["n"]))
    raise ValueError(f"unknown grid type {kind!r}")


@dataclass(frozen=True)
class Circle:
    """``n`` equispaced points ``exp(2 pi i j / n)`` on the unit circle."""

    n: int

    def __post_init__(self):
        if self.n < 2:
            raise ValueError("a circle grid needs at least two points")

    def angles(self) -> np.ndarray:
        return 2.0 * np.pi * np.arange(self.n) / self.n

    def points(self) -> np.ndarray:
        return np.exp(1j * self.angles())

    def describe(self) -> dict:
        return {"type": "circle", "n": self.n}
