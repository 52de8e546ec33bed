"""Moving-average series and their partial-sum step paths.

The moving average needs innovations at negative indices (history before
time 1), so innovation windows are materialized as arrays carrying their
first index.  Partial sums are Kahan-compensated: heavy-tailed summands span
many orders of magnitude and the exact-identity tests downstream demand
1e-9 accuracy.
"""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from ._sums import exact_sum, kahan_cumsum
from .coefficients import CoeffDraw, tail_sum
from .errors import DomainError

__all__ = [
    "StepPath",
    "InnovationWindow",
    "build_ma_series",
    "partial_sum_path",
    "truncated_ma_series",
    "LemmaIdentity",
    "lemma1_decomposition",
]


@dataclass(frozen=True)
class StepPath:
    """Cadlag step function on [0, 1] with jumps only at k/n.

    path(t) = values[floor(n*t)]; values has length n + 1 and values[0] is
    the value at t = 0.
    """

    n: int
    values: np.ndarray

    def __post_init__(self):
        vals = np.asarray(self.values, dtype=np.float64)
        if self.n < 1:
            raise DomainError("StepPath needs n >= 1")
        if len(vals) != self.n + 1:
            raise DomainError(f"values must have length n + 1 = {self.n + 1}, got {len(vals)}")
        object.__setattr__(self, "values", vals)

    def __call__(self, t: float) -> float:
        if not 0.0 <= t <= 1.0:
            raise DomainError("t must lie in [0, 1]")
        return float(self.values[min(self.n, int(math.floor(self.n * t)))])

    def scaled(self, c: float) -> "StepPath":
        return StepPath(self.n, c * self.values)

    def shifted(self, c: float) -> "StepPath":
        return StepPath(self.n, self.values + c)

    def refined(self, factor: int) -> "StepPath":
        """The same function on the grid with factor-times finer cells."""
        if factor < 1:
            raise DomainError("refinement factor must be >= 1")
        vals = np.concatenate([np.repeat(self.values[:-1], factor), self.values[-1:]])
        return StepPath(self.n * factor, vals)

    def jump_count(self) -> int:
        return int(np.count_nonzero(np.diff(self.values)))

    def to_csv(self, path) -> None:
        with open(path, "w", newline="") as fh:
            writer = csv.writer(fh)
            writer.writerow(["k", "t", "value"])
            for k, v in enumerate(self.values):
                writer.writerow([k, k / self.n, repr(float(v))])

    @staticmethod
    def from_csv(path) -> "StepPath":
        with open(Path(path), newline="") as fh:
            rows = list(csv.reader(fh))
        values = [float(r[2]) for r in rows[1:]]
        return StepPath(len(values) - 1, np.asarray(values))


@dataclass(frozen=True)
class InnovationWindow:
    """Innovations Z_i for i = first_index .. first_index + len(z) - 1."""

    first_index: int
    z: np.ndarray

    def __post_init__(self):
        object.__setattr__(self, "z", np.asarray(self.z, dtype=np.float64))

    @property
    def last_index(self) -> int:
        return self.first_index + len(self.z) - 1

    def covers(self, lo: int, hi: int) -> bool:
        return self.first_index <= lo and hi <= self.last_index

    def get(self, i: int) -> float:
        if not self.covers(i, i):
            raise DomainError(f"index {i} outside window [{self.first_index}, {self.last_index}]")
        return float(self.z[i - self.first_index])

    def slice(self, lo: int, hi: int) -> np.ndarray:
        """Z_lo..Z_hi as an array."""
        if not self.covers(lo, hi):
            raise DomainError(
                f"window [{self.first_index}, {self.last_index}] does not cover [{lo}, {hi}]"
            )
        off = self.first_index
        return self.z[lo - off : hi - off + 1]


def _filter_series(kernel: np.ndarray, window: InnovationWindow, n: int) -> np.ndarray:
    """X_i = sum_j kernel[j] * Z_{i-j} for i = 1..n."""
    k = len(kernel) - 1
    if n < 1:
        raise DomainError("series length n must be >= 1")
    if not window.covers(1 - k, n):
        raise DomainError(
            f"innovation window must cover indices [{1 - k}, {n}], "
            f"got [{window.first_index}, {window.last_index}]"
        )
    z = window.slice(1 - k, n)
    conv = np.convolve(z, kernel)
    return conv[k : n + k]


def build_ma_series(draw: CoeffDraw, window: InnovationWindow, n: int) -> np.ndarray:
    """The moving average X_1..X_n over the draw's full horizon.

    Truncation to the horizon changes each X_i by at most
    draw.tail_bound * max|Z| over the window.
    """
    return _filter_series(np.asarray(draw.values), window, n)


def truncated_ma_series(draw: CoeffDraw, q: int, window: InnovationWindow, n: int) -> np.ndarray:
    """The lag-q truncation: X^q_i = sum_{j<q} C_j Z_{i-j} + C'_q Z_{i-q}.

    The collapsed coefficients conserve the total weight: C_0 + .. + C_{q-1}
    + C'_q equals the series sum for every q.  q = 0 collapses everything
    into C * Z_i.
    """
    c_prime, _ = tail_sum(draw, q)
    kernel = np.concatenate([draw.values[:q], [c_prime]])
    return _filter_series(kernel, window, n)


def partial_sum_path(series, a_n: float) -> StepPath:
    """The step path of partial sums over a_n: v_0 = 0, v_k = sum_{i<=k} X_i / a_n."""
    if not a_n > 0:
        raise DomainError("the normalizing constant a_n must be positive")
    arr = np.asarray(series, dtype=np.float64)
    vals = np.concatenate([[0.0], kahan_cumsum(arr) / a_n])
    return StepPath(len(arr), vals)


@dataclass(frozen=True)
class LemmaIdentity:
    """Both sides of one exact decomposition of C*(partial Z sums) minus
    (partial X sums), plus the boundary terms named in cases (ii)/(iii).
    """

    case: str
    lhs: float
    rhs: float
    residual: float
    h: float | None = None
    g: float | None = None
    t: float | None = None


def lemma1_decomposition(
    k: int,
    q: int,
    n: int,
    coeffs,
    window: InnovationWindow,
    a_n: float = 1.0,
    case: str | None = None,
) -> LemmaIdentity:
    """Evaluate one case of the exact finite-order decomposition.

    `coeffs` lists C_0..C_q of the order-q moving average.  Case "i" requires
    k < q, case "ii" k >= q, case "iii" q <= k <= n - q; when `case` is None
    it defaults to "i" or "ii" by the size of k.  Both sides are evaluated
    independently (the left from the definitions, the right from the
    displayed boundary sums), each with correctly rounded summation.
    """
    coeffs = np.asarray(coeffs, dtype=np.float64)
    if len(coeffs) != q + 1:
        raise DomainError("coeffs must list C_0..C_q")
    if not (1 <= k <= n):
        raise DomainError("k must lie in [1, n]")
    if not a_n > 0:
        raise DomainError("a_n must be positive")
    if case is None:
        case = "i" if k < q else "ii"
    if case == "i" and not k < q:
        raise DomainError("case (i) requires k < q")
    if case == "ii" and not k >= q:
        raise DomainError("case (ii) requires k >= q")
    if case == "iii" and not (q <= k <= n - q):
        raise DomainError("case (iii) requires q <= k <= n - q")

    c_total = exact_sum(coeffs)

    def suffix(s0: int) -> float:
        """sum_{s=s0}^{q} C_s"""
        return exact_sum(coeffs[s0 : q + 1])

    def prefix(s1: int) -> float:
        """sum_{s=0}^{s1} C_s"""
        return exact_sum(coeffs[: s1 + 1])

    def x_at(i: int) -> float:
        return exact_sum(coeffs * window.slice(i - q, i)[::-1])

    upto = k + q if case == "iii" else k
    lhs = (
        exact_sum([c_total * window.get(i) for i in range(1, k + 1)])
        - exact_sum([x_at(i) for i in range(1, upto + 1)])
    ) / a_n

    g = exact_sum([window.get(-u) * suffix(u + 1) for u in range(0, q)]) / a_n
    h = t = None
    if case == "i":
        term1 = exact_sum([window.get(k - u) * suffix(u + 1) for u in range(0, k)])
        term2 = exact_sum([window.get(-u) * suffix(u + 1) for u in range(q - k, q)])
        term3 = exact_sum(
            [window.get(-u) * exact_sum(coeffs[u + 1 : u + k + 1]) for u in range(0, q - k)]
        )
        rhs = (term1 - term2 - term3) / a_n
    elif case == "ii":
        h = exact_sum([window.get(k - u) * suffix(u + 1) for u in range(0, q)]) / a_n
        rhs = h - g
    else:
        t = exact_sum([window.get(k + u) * prefix(q - u) for u in range(1, q + 1)]) / a_n
        rhs = -g - t
    return LemmaIdentity(
        case=case,
        lhs=float(lhs),
        rhs=float(rhs),
        residual=abs(float(lhs) - float(rhs)),
        h=h,
        g=g,
        t=t,
    )
