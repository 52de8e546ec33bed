"""Skorokhod M2 distance between step paths.

The M2 distance is the two-sided Hausdorff distance between completed graphs
under the coordinatewise-max metric on the plane.  For a step path the
completed graph is an x-monotone staircase, which gives an exact oracle for
the distance from a point (t, y) to a graph: the cross-sections of the
staircase over any x-window [t-s, t+s] fill the interval between the running
minimum and maximum of the step values there, so

    d((t, y), graph) = min { s >= 0 : dist(y, [rmin(s), rmax(s)]) <= s },

and the left side is found by bisection with O(1) range-min/max lookups.

The outer supremum over points of the other graph is a one-dimensional
Lipschitz maximization along each segment (the distance-to-set function is
1-Lipschitz in the max metric), solved by certified branch-and-bound: an
interval with endpoint values f1, f2 and length L cannot exceed
(f1 + f2 + L) / 2, so refinement stops once the global upper and lower
bounds meet within the requested tolerance.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .errors import DomainError, ResolutionError
from .ma_paths import StepPath

__all__ = [
    "CompletedGraph",
    "completed_graph",
    "directed_hausdorff",
    "d_m2",
    "d_uniform",
]

_BISECT_ITERS = 64


class _RangeTable:
    """Sparse table for O(1) range min/max over a fixed value array."""

    def __init__(self, values: np.ndarray):
        n = len(values)
        levels = max(1, n.bit_length())
        mins = [values]
        maxs = [values]
        for j in range(1, levels):
            half = 1 << (j - 1)
            prev_min, prev_max = mins[-1], maxs[-1]
            if len(prev_min) <= half:
                break
            mins.append(np.minimum(prev_min[:-half], prev_min[half:]))
            maxs.append(np.maximum(prev_max[:-half], prev_max[half:]))
        self._mins = mins
        self._maxs = maxs

    def query(self, lo: np.ndarray, hi: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
        """Min and max of values[lo..hi] (inclusive), vectorized; needs lo <= hi."""
        span = hi - lo + 1
        level = np.zeros(span.shape, dtype=np.int64)
        big = span > 1
        level[big] = np.int64(np.floor(np.log2(span[big] - 0.5)))
        level = np.minimum(level, len(self._mins) - 1)
        width = np.int64(1) << level
        second = np.maximum(lo, hi - width + 1)
        mins = np.empty(lo.shape, dtype=np.float64)
        maxs = np.empty(lo.shape, dtype=np.float64)
        for lv in np.unique(level):
            sel = level == lv
            tbl_min, tbl_max = self._mins[lv], self._maxs[lv]
            mins[sel] = np.minimum(tbl_min[lo[sel]], tbl_min[second[sel]])
            maxs[sel] = np.maximum(tbl_max[lo[sel]], tbl_max[second[sel]])
        return mins, maxs


@dataclass(frozen=True, eq=False)
class CompletedGraph:
    """The completed graph of a step path: axis-aligned staircase segments.

    `segments` alternates horizontal pieces (one per merged constant run,
    including a possibly degenerate piece at t = 1) and the vertical pieces
    joining them, so a path with J strict jumps yields exactly 2J + 1
    segments.  The graph starts at (0, v_0); there is no artificial vertical
    down to the axis.
    """

    n: int
    values: np.ndarray
    run_starts: np.ndarray = field(repr=False)
    run_values: np.ndarray = field(repr=False)

    @property
    def segments(self) -> list[tuple[tuple[float, float], tuple[float, float]]]:
        segs = []
        starts, ys = self.run_starts, self.run_values
        for r in range(len(ys)):
            end = starts[r + 1] if r + 1 < len(starts) else 1.0
            segs.append(((float(starts[r]), float(ys[r])), (float(end), float(ys[r]))))
            if r + 1 < len(ys):
                segs.append(((float(end), float(ys[r])), (float(end), float(ys[r + 1]))))
        return segs

    def __eq__(self, other):
        return (
            isinstance(other, CompletedGraph)
            and self.n == other.n
            and np.array_equal(self.values, other.values)
        )

    def table(self) -> _RangeTable:
        tbl = getattr(self, "_table", None)
        if tbl is None:
            tbl = _RangeTable(self.values)
            object.__setattr__(self, "_table", tbl)
        return tbl


def completed_graph(path: StepPath) -> CompletedGraph:
    """Build the completed graph, merging consecutive equal step values."""
    vals = path.values
    change = np.nonzero(np.diff(vals))[0]  # jump between index k and k+1
    run_starts = np.concatenate([[0.0], (change + 1) / path.n])
    run_values = vals[np.concatenate([[0], change + 1])]
    return CompletedGraph(n=path.n, values=vals, run_starts=run_starts, run_values=run_values)


def _point_distances(
    graph: CompletedGraph, ts: np.ndarray, ys: np.ndarray, precision: float = 0.0
) -> np.ndarray:
    """Max-metric distance from each (t, y) to the staircase.

    Returns an upper bound within `precision` of the exact value (machine
    precision when `precision` is 0).
    """
    n = graph.n
    table = graph.table()

    def phi(s: np.ndarray) -> np.ndarray:
        lo_idx = np.floor(n * np.clip(ts - s, 0.0, 1.0)).astype(np.int64)
        hi_idx = np.floor(n * np.clip(ts + s, 0.0, 1.0)).astype(np.int64)
        lo_idx = np.clip(lo_idx, 0, n)
        hi_idx = np.clip(hi_idx, 0, n)
        rmin, rmax = table.query(lo_idx, hi_idx)
        return np.maximum(0.0, np.maximum(rmin - ys, ys - rmax))

    hi = phi(np.zeros_like(ts))
    lo = np.zeros_like(hi)
    for _ in range(_BISECT_ITERS):
        if not np.any(hi - lo > precision):
            break
        mid = 0.5 * (lo + hi)
        ok = phi(mid) <= mid
        hi = np.where(ok, mid, hi)
        lo = np.where(ok, lo, mid)
    return hi


def _interval_upper_bounds(
    graph: CompletedGraph, ta: np.ndarray, tb: np.ndarray, ys: np.ndarray
) -> np.ndarray:
    """Certified upper bound of sup_{t in [ta, tb]} dist((t, y), graph).

    For s >= (tb - ta)/2 every point's window [t - s, t + s] contains the
    common core [tb - s, ta + s], so the distance of the core's range to y
    lower-bounds every phi_t(s); the smallest such s with core-range distance
    <= s therefore dominates the supremum.  The bound is exact whenever the
    nearest stretch of the graph is flat across the interval, which is the
    plateau case that plain tent bounds refine forever.
    """
    n = graph.n
    table = graph.table()
    half = 0.5 * (tb - ta)

    def psi(s: np.ndarray) -> np.ndarray:
        lo_idx = np.clip(np.floor(n * np.clip(tb - s, 0.0, 1.0)).astype(np.int64), 0, n)
        hi_idx = np.clip(np.floor(n * np.clip(ta + s, 0.0, 1.0)).astype(np.int64), 0, n)
        rmin, rmax = table.query(lo_idx, hi_idx)
        return np.maximum(0.0, np.maximum(rmin - ys, ys - rmax))

    lo = half.copy()
    hi = np.maximum(half, psi(half))
    for _ in range(40):
        mid = 0.5 * (lo + hi)
        ok = psi(mid) <= mid
        hi = np.where(ok, mid, hi)
        lo = np.where(ok, lo, mid)
    return hi


def _segment_arrays(graph: CompletedGraph):
    """Endpoint arrays (x1, y1, x2, y2) of every segment of the graph."""
    starts, ys = graph.run_starts, graph.run_values
    ends = np.concatenate([starts[1:], [1.0]])
    if len(ys) > 1:
        vx = ends[:-1]
        x1 = np.concatenate([starts, vx])
        y1 = np.concatenate([ys, ys[:-1]])
        x2 = np.concatenate([ends, vx])
        y2 = np.concatenate([ys, ys[1:]])
    else:
        x1, y1, x2, y2 = starts, ys, ends, ys
    return x1, y1, x2, y2


def directed_hausdorff(g1: CompletedGraph, g2: CompletedGraph, tol: float = 1e-6) -> float:
    """sup over points a of g1 of the max-metric distance from a to g2.

    Certified within absolute error `tol` by Lipschitz branch-and-bound along
    the segments of g1.
    """
    if not tol > 0:
        raise DomainError("tol must be positive")
    if g1 == g2:
        return 0.0

    # Point evaluations are upper bounds within eps, which costs eps of
    # certificate budget on each side; the interval margin tau keeps the
    # total error within tol: |result - sup| <= tau/2 + eps = tol.
    eps = tol / 8.0
    tau = 2.0 * (tol - eps)

    ax, ay, bx, by = _segment_arrays(g1)
    fa = _point_distances(g2, ax, ay, eps)
    fb = _point_distances(g2, bx, by, eps)
    best = float(max(fa.max(), fb.max()))

    # Along a vertical segment the distance is quasi-convex in y (its
    # sublevel sets are y-intervals), so the supremum sits at an endpoint
    # already counted in `best`; only horizontal pieces need refinement.
    horizontal = ay == by
    ax, ay, bx, by = ax[horizontal], ay[horizontal], bx[horizontal], by[horizontal]
    fa, fb = fa[horizontal], fb[horizontal]

    while ax.size:
        tent = 0.5 * (fa + fb + (bx - ax))
        upper = tent.copy()
        candidate = tent > best + tau
        if np.any(candidate):
            core = _interval_upper_bounds(g2, ax[candidate], bx[candidate], ay[candidate])
            upper[candidate] = np.minimum(tent[candidate], core)
        cap = max(float(upper.max()), best)
        if cap - best <= tau:
            return 0.5 * (cap + best)
        active = upper > best + tau
        ax, ay, bx, by = ax[active], ay[active], bx[active], by[active]
        fa, fb = fa[active], fb[active]
        mx = 0.5 * (ax + bx)
        fm = _point_distances(g2, mx, ay, eps)
        best = max(best, float(fm.max()))
        ax, bx = np.concatenate([ax, mx]), np.concatenate([mx, bx])
        ay, by = np.concatenate([ay, ay]), np.concatenate([by, by])
        fa, fb = np.concatenate([fa, fm]), np.concatenate([fm, fb])
    return best


def d_m2(p1: StepPath, p2: StepPath, tol: float = 1e-6) -> float:
    """Skorokhod M2 distance: the larger of the two directed Hausdorff values.

    Symmetric by construction; certified absolute error at most `tol`.
    """
    g1, g2 = completed_graph(p1), completed_graph(p2)
    return max(directed_hausdorff(g1, g2, tol), directed_hausdorff(g2, g1, tol))


def d_uniform(p1: StepPath, p2: StepPath, max_refined: int = 10 ** 6) -> float:
    """Uniform distance between two step paths, exact on a common grid.

    Paths on different grids are resampled to the least common refinement;
    a refinement beyond `max_refined` cells is refused.
    """
    if p1.n != p2.n:
        g = math.gcd(p1.n, p2.n)
        lcm = p1.n // g * p2.n
        if lcm > max_refined:
            raise ResolutionError(
                f"common refinement needs {lcm} cells, above the limit {max_refined}"
            )
        p1 = p1.refined(lcm // p1.n)
        p2 = p2.refined(lcm // p2.n)
    return float(np.max(np.abs(p1.values - p2.values)))
