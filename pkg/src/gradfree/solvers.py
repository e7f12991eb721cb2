"""Grid-shrinking global minimizers: BBS, Multi BBS and Direction BBS.

All three keep a box ``[b, B]`` that is known (for in-class objectives) to
contain the global minimizer, probe it on a uniform grid, and re-center a
smaller box on the best probe. Each returns a :class:`RunTrace`.
"""
from __future__ import annotations

import csv
import io
import json
import math
from dataclasses import dataclass, field
from typing import Optional

import numpy as np

from .errors import (BudgetExceeded, DimensionMismatch, DimensionTooSmall,
                     InvalidBox, InvalidInterval, NonFiniteValue)
from .geometry import Box, build_grid, center, clip_around, diameter, max_edge
from .oracles import GoodClassParams, OracleHandle, VeryGoodClassParams

DEFAULT_CALL_CAP = 10**8
# Grid points evaluated per oracle batch in multi_bbs.
EVAL_CHUNK = 1 << 16


@dataclass(frozen=True)
class BbsConfig:
    epsilon: float
    params: GoodClassParams

    def __post_init__(self):
        if not self.epsilon > 0:
            raise ValueError("epsilon must be positive")


@dataclass(frozen=True)
class MultiBbsConfig:
    epsilon: float
    params: GoodClassParams
    alpha: float = 2.0
    max_calls: int = DEFAULT_CALL_CAP

    def __post_init__(self):
        if not self.epsilon > 0:
            raise ValueError("epsilon must be positive")
        if not self.alpha > 1:
            raise ValueError("alpha must be > 1")


@dataclass(frozen=True)
class DirectionBbsConfig:
    epsilon: float
    n_points: int = 15
    longest_edge_first: bool = False
    class_params: Optional[VeryGoodClassParams] = None
    max_calls: int = DEFAULT_CALL_CAP

    def __post_init__(self):
        if not self.epsilon > 0:
            raise ValueError("epsilon must be positive")
        if self.n_points < 15:
            raise ValueError("n_points must be >= 15 for the 3/2 contraction guarantee")


@dataclass
class IterationRecord:
    index: int
    box_before: Box
    box_after: Box
    incumbent: np.ndarray
    incumbent_value: float
    oracle_calls_this_iter: int


@dataclass
class RunTrace:
    solver: str
    initial_box: Box
    n: int
    iterations: list[IterationRecord] = field(default_factory=list)
    final_point: Optional[np.ndarray] = None
    stalled: bool = False

    @property
    def total_calls(self) -> int:
        return sum(rec.oracle_calls_this_iter for rec in self.iterations)

    @property
    def final_box(self) -> Box:
        return self.iterations[-1].box_after if self.iterations else self.initial_box

    def rows(self, x_star=None):
        """Per-iteration rows for CSV export."""
        cumulative = 0
        for rec in self.iterations:
            cumulative += rec.oracle_calls_this_iter
            dist = ("" if x_star is None
                    else float(np.linalg.norm(rec.incumbent - np.asarray(x_star))))
            yield {
                "index": rec.index,
                "max_edge": max_edge(rec.box_after),
                "diameter": diameter(rec.box_after),
                "incumbent_value": rec.incumbent_value,
                "distance_to_xstar": dist,
                "cumulative_calls": cumulative,
            }

    CSV_COLUMNS = ("index", "max_edge", "diameter", "incumbent_value",
                   "distance_to_xstar", "cumulative_calls")

    def to_csv(self, x_star=None) -> str:
        buf = io.StringIO()
        writer = csv.DictWriter(buf, fieldnames=self.CSV_COLUMNS, lineterminator="\n")
        writer.writeheader()
        for row in self.rows(x_star):
            writer.writerow({k: repr(v) if isinstance(v, float) else v for k, v in row.items()})
        return buf.getvalue()

    def summary(self) -> dict:
        return {
            "solver": self.solver,
            "final_point": self.final_point.tolist(),
            "total_calls": self.total_calls,
            "iterations": len(self.iterations),
            "n": self.n,
            "stalled": self.stalled,
        }

    def to_json(self) -> str:
        return json.dumps(self.summary())


def _checked(values: np.ndarray) -> np.ndarray:
    if not np.all(np.isfinite(values)):
        raise NonFiniteValue("oracle returned a non-finite value")
    return values


def _check_budget(handle: OracleHandle, start: int, extra: int, cap: int):
    if handle.call_count - start + extra > cap:
        raise BudgetExceeded(f"next iteration would exceed the cap of {cap} oracle calls")


def _ceil_int(x: float) -> int:
    # Absorb float noise such as 1.1 * 10 = 11.000000000000002.
    nearest = round(x)
    if abs(x - nearest) <= 1e-9 * max(1.0, abs(x)):
        return int(nearest)
    return math.ceil(x)


def bbs_grid_size(params: GoodClassParams) -> int:
    """Subintervals per BBS iteration: ``2 ceil(sqrt(L/mu))``."""
    return 2 * _ceil_int(math.sqrt(params.big_l / params.mu))


def multi_bbs_grid_size(params: GoodClassParams, d: int, alpha: float) -> int:
    """Subdivisions of the longest edge: ``ceil(alpha * ceil(sqrt(d L / mu)))``."""
    return _ceil_int(alpha * _ceil_int(math.sqrt(d * params.big_l / params.mu)))


def bbs_1d(handle: OracleHandle, lo: float, hi: float, config: BbsConfig) -> RunTrace:
    """One-dimensional search halving ``[lo, hi]`` around the best probe.

    Both new bounds are computed from the bounds at the start of the
    iteration.
    """
    lo, hi = float(lo), float(hi)
    if not (math.isfinite(lo) and math.isfinite(hi) and lo < hi):
        raise InvalidInterval(f"need finite lo < hi, got [{lo}, {hi}]")
    n = bbs_grid_size(config.params)
    trace = RunTrace("bbs", Box([lo], [hi]), n)
    b, B = lo, hi
    while B - b >= 2 * config.epsilon:
        width = (B - b) / n
        pts = np.minimum(b + np.arange(n + 1) * width, B)
        values = _checked(handle.eval_batch(pts[:, None]))
        i_best = int(np.argmin(values))
        # b + (i* -+ n/4) * width, i.e. the incumbent -+ a quarter of the grid
        lo_new, hi_new = clip_around([b], [B], [b + i_best * width], n / 4 * width,
                                     max_width=(B - b) / 2.0)
        new_b, new_B = float(lo_new[0]), float(hi_new[0])
        trace.iterations.append(IterationRecord(
            len(trace.iterations), Box([b], [B]), Box([new_b], [new_B]),
            np.array([pts[i_best]]), float(values[i_best]), n + 1))
        if (new_b, new_B) == (b, B):
            trace.stalled = True
            break
        b, B = new_b, new_B
    trace.final_point = np.array([(b + B) / 2.0])
    return trace


def multi_bbs(handle: OracleHandle, box: Box, config: MultiBbsConfig) -> RunTrace:
    """Multi-dimensional BBS on a full grid; longest edge shrinks by ``alpha``.

    The grid step is the longest edge over ``n``; shorter axes get as many
    points as fit. The next box has half-width ``n r / (2 alpha)`` around the
    incumbent, clipped to the current box. Ties go to the lexicographically
    smallest grid index.
    """
    if not isinstance(box, Box):
        raise InvalidBox("multi_bbs needs a Box")
    if handle.dim is not None and handle.dim != box.dim:
        raise DimensionMismatch(f"objective dimension {handle.dim} != box dimension {box.dim}")
    n = multi_bbs_grid_size(config.params, box.dim, config.alpha)
    trace = RunTrace("multibbs", box, n)
    start_calls = handle.call_count
    current = box
    while diameter(current) >= config.epsilon:
        grid = build_grid(current, n)
        _check_budget(handle, start_calls, grid.size, config.max_calls)
        best_value, best_flat = math.inf, -1
        for lo in range(0, grid.size, EVAL_CHUNK):
            values = _checked(handle.eval_batch(grid.points(lo, lo + EVAL_CHUNK)))
            k = int(np.argmin(values))
            # Strict comparison keeps the earliest (lexicographic) index on ties.
            if values[k] < best_value:
                best_value, best_flat = float(values[k]), lo + k
        incumbent = grid.point(grid.unravel(best_flat))
        half = n * grid.step / (2.0 * config.alpha)
        lo, hi = clip_around(current.lower, current.upper, incumbent, half,
                             max_width=max_edge(current) / config.alpha)
        after = Box(lo, hi)
        trace.iterations.append(IterationRecord(
            len(trace.iterations), current, after, incumbent, best_value, grid.size))
        if after == current:
            trace.stalled = True
            break
        current = after
    trace.final_point = center(current)
    return trace


def direction_bbs(handle: OracleHandle, box: Box, config: DirectionBbsConfig) -> RunTrace:
    """Coordinate-wise BBS: one line search of ``n + 1`` probes per coordinate.

    Off-axis coordinates are held at the running incumbent ``m``. Each line
    search re-centers coordinate ``i`` on its best probe with half-width
    ``R / 3``, where ``R`` is the current longest edge. One record is stored
    per outer sweep, which costs exactly ``d (n + 1)`` oracle calls.
    """
    if not isinstance(box, Box):
        raise InvalidBox("direction_bbs needs a Box")
    d = box.dim
    if d < 2:
        raise DimensionTooSmall("direction_bbs needs d >= 2; use bbs_1d on a segment")
    if handle.dim is not None and handle.dim != d:
        raise DimensionMismatch(f"objective dimension {handle.dim} != box dimension {d}")
    n = config.n_points
    trace = RunTrace("dirbbs", box, n)
    start_calls = handle.call_count
    b = box.lower.copy()
    B = box.upper.copy()
    m = center(box)
    steps = np.arange(n + 1)
    while np.linalg.norm(B - b) >= 2 * config.epsilon:
        _check_budget(handle, start_calls, d * (n + 1), config.max_calls)
        before = Box(b.copy(), B.copy())
        best_value = math.nan
        for step in range(d):
            i = int(np.argmax(B - b)) if config.longest_edge_first else step
            R = float(np.max(B - b))
            line = np.minimum(b[i] + steps * (B[i] - b[i]) / n, B[i])
            probes = np.repeat(m[None, :], n + 1, axis=0)
            probes[:, i] = line
            values = _checked(handle.eval_batch(probes))
            j = int(np.argmin(values))
            m[i] = line[j]
            best_value = float(values[j])
            lo, hi = clip_around(b[i:i + 1], B[i:i + 1], m[i:i + 1], R / 3.0,
                                 max_width=2.0 * R / 3.0)
            b[i], B[i] = lo[0], hi[0]
        after = Box(b.copy(), B.copy())
        trace.iterations.append(IterationRecord(
            len(trace.iterations), before, after, m.copy(), best_value, d * (n + 1)))
        if after == before:
            trace.stalled = True
            break
    trace.final_point = (b + B) / 2.0
    return trace


def required_iterations(initial_box: Box, epsilon: float, contraction: float) -> int:
    """Smallest ``T`` with ``sqrt(d) * max_edge / contraction**T <= epsilon``."""
    if not contraction > 1:
        raise ValueError("contraction must be > 1")
    start = math.sqrt(initial_box.dim) * max_edge(initial_box)
    if start <= epsilon:
        return 0
    T = max(0, math.ceil(math.log(start / epsilon) / math.log(contraction)))
    while T > 0 and start / contraction ** (T - 1) <= epsilon:
        T -= 1
    while start / contraction**T > epsilon:
        T += 1
    return T
