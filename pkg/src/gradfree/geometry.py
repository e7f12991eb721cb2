"""Axis-aligned boxes and the uniform grids laid over them.

Every solver in :mod:`gradfree.solvers` works on a :class:`Box` and shrinks it
with the same clip arithmetic, so all of it lives here.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Iterator, Sequence

import numpy as np

from .errors import DegenerateBox, DimensionMismatch, InvalidBox

# Added to the per-axis ratio before flooring so an exactly integral ratio
# never loses its last point to rounding.
FLOOR_GUARD = 1e-9


def _as_vector(values) -> np.ndarray:
    arr = np.array(values, dtype=float).reshape(-1)
    arr.setflags(write=False)
    return arr


@dataclass(frozen=True, eq=False)
class Box:
    """Hyperrectangle ``[lower, upper]``; zero-width edges are allowed."""

    lower: np.ndarray
    upper: np.ndarray

    def __post_init__(self):
        lower = _as_vector(self.lower)
        upper = _as_vector(self.upper)
        if lower.size == 0:
            raise InvalidBox("box must have dimension >= 1")
        if lower.shape != upper.shape:
            raise DimensionMismatch(
                f"lower has dimension {lower.size}, upper has {upper.size}"
            )
        if not (np.all(np.isfinite(lower)) and np.all(np.isfinite(upper))):
            raise InvalidBox("box bounds must be finite")
        if np.any(lower > upper):
            raise InvalidBox(f"lower > upper in box [{lower}, {upper}]")
        object.__setattr__(self, "lower", lower)
        object.__setattr__(self, "upper", upper)

    @classmethod
    def cube(cls, low: float, high: float, d: int) -> "Box":
        return cls(np.full(d, float(low)), np.full(d, float(high)))

    @property
    def dim(self) -> int:
        return self.lower.size

    @property
    def edges(self) -> np.ndarray:
        return self.upper - self.lower

    def contains(self, x, atol: float = 0.0) -> bool:
        x = np.asarray(x, dtype=float)
        return bool(np.all(x >= self.lower - atol) and np.all(x <= self.upper + atol))

    def is_subset_of(self, other: "Box", atol: float = 0.0) -> bool:
        return bool(
            np.all(self.lower >= other.lower - atol)
            and np.all(self.upper <= other.upper + atol)
        )

    def __eq__(self, other):
        if not isinstance(other, Box):
            return NotImplemented
        return np.array_equal(self.lower, other.lower) and np.array_equal(
            self.upper, other.upper
        )

    def __hash__(self):
        return hash((self.lower.tobytes(), self.upper.tobytes()))

    def __repr__(self):
        return f"Box(lower={self.lower.tolist()}, upper={self.upper.tolist()})"


def max_edge(box: Box) -> float:
    return float(np.max(box.edges))


def center(box: Box) -> np.ndarray:
    return (box.lower + box.upper) / 2.0


def diameter(box: Box) -> float:
    return float(np.linalg.norm(box.edges))


def shrink_edge(lo: float, hi: float, center: float, half_width: float) -> tuple[float, float]:
    """Clip ``[center - half_width, center + half_width]`` to ``[lo, hi]``."""
    return max(lo, center - half_width), min(hi, center + half_width)


@dataclass(frozen=True, eq=False)
class GridSpec:
    """Uniform grid ``base + i * step`` with ``0 <= i_j <= counts[j]``.

    Points are produced on demand from their index; nothing is materialized
    unless :meth:`points` is called. Coordinates are clipped to ``upper`` so
    that floating error never pushes a point outside the originating box.
    """

    base: np.ndarray
    step: float
    counts: tuple[int, ...]
    upper: np.ndarray = field(repr=False)

    @property
    def dim(self) -> int:
        return len(self.counts)

    @property
    def shape(self) -> tuple[int, ...]:
        return tuple(c + 1 for c in self.counts)

    @property
    def size(self) -> int:
        return math.prod(self.shape)

    def point(self, index: Sequence[int]) -> np.ndarray:
        idx = np.asarray(index, dtype=float)
        return np.minimum(self.base + idx * self.step, self.upper)

    def axis_values(self, j: int) -> np.ndarray:
        return np.minimum(
            self.base[j] + np.arange(self.counts[j] + 1) * self.step, self.upper[j]
        )

    def unravel(self, flat: int) -> tuple[int, ...]:
        return tuple(int(i) for i in np.unravel_index(flat, self.shape))

    def iter_indices(self) -> Iterator[tuple[int, ...]]:
        """Indices in lexicographic order."""
        return np.ndindex(*self.shape)

    def points(self, start: int = 0, stop: int | None = None) -> np.ndarray:
        """Rows ``start:stop`` of the lexicographically ordered point list."""
        stop = self.size if stop is None else min(stop, self.size)
        flat = np.arange(start, stop)
        idx = np.stack(np.unravel_index(flat, self.shape), axis=1).astype(float)
        return np.minimum(self.base + idx * self.step, self.upper)


def build_grid(box: Box, n: int) -> GridSpec:
    """Grid whose step is the longest edge divided by ``n``."""
    if n < 1:
        raise ValueError(f"n must be >= 1, got {n}")
    longest = max_edge(box)
    if longest == 0.0:
        raise DegenerateBox("cannot grid a box with zero-length edges only")
    step = longest / n
    counts = tuple(int(math.floor(e / step + FLOOR_GUARD)) for e in box.edges)
    return GridSpec(base=box.lower, step=step, counts=counts, upper=box.upper)


def clip_around(lower, upper, center, half_width, max_width=None):
    """Vector form of :func:`shrink_edge`.

    With ``max_width`` set, any edge that float rounding left wider than
    ``max_width`` is pulled inward ulp by ulp (never past ``center``), so a
    contraction that holds exactly also holds in floating point.
    """
    lower = np.asarray(lower, dtype=float)
    upper = np.asarray(upper, dtype=float)
    center = np.asarray(center, dtype=float)
    lo = np.maximum(lower, center - half_width)
    hi = np.minimum(upper, center + half_width)
    if max_width is not None:
        for j in np.flatnonzero(hi - lo > max_width):
            for _ in range(64):
                if hi[j] - lo[j] <= max_width:
                    break
                if hi[j] - center[j] >= center[j] - lo[j] and hi[j] > center[j]:
                    hi[j] = np.nextafter(hi[j], -np.inf)
                elif lo[j] < center[j]:
                    lo[j] = np.nextafter(lo[j], np.inf)
                else:
                    break
    return lo, hi
