"""Coefficient sequences for the moving average.

Four generators are provided:

* `DeterministicCoeffs` - an explicit finite list.
* `GeometricCoeffs` - the deterministic decay formula C_j = scale * rho**j,
  whose tail sums are exact geometric series.
* `IidScaledCoeffs` - C_j = scale * rho**j * U_j with U_j iid on [0, 1], so
  |C_j| <= scale * rho**j almost surely and every absolute-moment series
  converges.
* `RemarkCoeffs` - the single-spike construction C_i = i on the slice
  (S_{i-1}, S_i] of a uniform variable, which separates the delta-moment and
  gamma-moment summability conditions.

`check_sandwich` verifies that all partial sums of a list stay between zero
and the full sum, the structural hypothesis behind the M2 convergence.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Union

import numpy as np
from scipy.special import zeta

from ._sums import exact_sum
from .errors import ConfigError, DomainError, SandwichIndeterminate

__all__ = [
    "DeterministicCoeffs",
    "GeometricCoeffs",
    "IidScaledCoeffs",
    "RemarkCoeffs",
    "CoeffModel",
    "CoeffDraw",
    "draw_coefficients",
    "default_horizon",
    "check_sandwich",
    "tail_sum",
    "MomentExponents",
    "DiagnosticsRow",
    "DiagnosticsReport",
    "moment_diagnostics",
    "coeff_model_to_dict",
    "coeff_model_from_dict",
]


@dataclass(frozen=True)
class DeterministicCoeffs:
    """Explicit finite coefficient list C_0..C_m."""

    values: tuple[float, ...]

    def __post_init__(self):
        if len(self.values) == 0:
            raise ConfigError("deterministic coefficient list must be nonempty")
        object.__setattr__(self, "values", tuple(float(v) for v in self.values))

    def abs_moment(self, j: int, s: float) -> float:
        return abs(self.values[j]) ** s if j < len(self.values) else 0.0


@dataclass(frozen=True)
class GeometricCoeffs:
    """Deterministic decay formula C_j = scale * rho**j."""

    rho: float = 0.5
    scale: float = 1.0

    def __post_init__(self):
        if not 0.0 < self.rho < 1.0:
            raise ConfigError("geometric decay rate rho must lie in (0, 1)")
        if self.scale == 0.0:
            raise ConfigError("geometric scale must be nonzero")

    def abs_moment(self, j: int, s: float) -> float:
        return (abs(self.scale) * self.rho ** j) ** s

    def tail_abs_sum(self, start: int, s: float = 1.0) -> float:
        """Sum of |C_j|**s over j >= start, exactly."""
        q = self.rho ** s
        return (abs(self.scale) ** s) * q ** start / (1.0 - q)


@dataclass(frozen=True)
class IidScaledCoeffs:
    """C_j = scale * rho**j * U_j with U_j iid from a bounded base law on [0, 1]."""

    rho: float = 0.5
    scale: float = 1.0
    base: str = "uniform"

    def __post_init__(self):
        if not 0.0 < self.rho < 1.0:
            raise ConfigError("decay rate rho must lie in (0, 1)")
        if self.base not in ("uniform", "constant"):
            raise ConfigError(f"unknown base law {self.base!r}")

    def base_moment(self, s: float) -> float:
        """E U**s of the base law."""
        if self.base == "uniform":
            return 1.0 / (1.0 + s)
        return 1.0

    def abs_moment(self, j: int, s: float) -> float:
        return self.base_moment(s) * (abs(self.scale) * self.rho ** j) ** s

    def tail_abs_bound(self, start: int) -> float:
        """Almost-sure bound on sum of |C_j| over j >= start."""
        return abs(self.scale) * self.rho ** start / (1.0 - self.rho)


@dataclass(frozen=True)
class RemarkCoeffs:
    """Single random spike: C_i = i exactly when omega falls in (S_{i-1}, S_i].

    S_k are the normalized partial sums of j**-(1 + delta + eps); the
    construction needs delta + eps < gamma so that the delta-moment series
    converges while the gamma-moment series diverges.
    """

    delta: float
    eps: float
    gamma: float

    def __post_init__(self):
        if not (0.0 < self.delta <= 1.0):
            raise ConfigError("delta must lie in (0, 1]")
        if not self.eps > 0.0:
            raise ConfigError("eps must be positive")
        if not (0.0 < self.gamma < 1.0):
            raise ConfigError("gamma must lie in (0, 1)")
        if self.delta + self.eps >= self.gamma:
            raise ConfigError("the construction requires delta + eps < gamma")

    @property
    def exponent(self) -> float:
        return 1.0 + self.delta + self.eps

    @property
    def normalizer(self) -> float:
        """S = sum_j j**-(1+delta+eps)."""
        return float(zeta(self.exponent))

    def spike_index(self, omega: float) -> int:
        """Smallest i with S_i >= omega, by bisection on the exact tail sums."""
        target = (1.0 - omega) * self.normalizer  # smallest i with tail(i) <= target
        if float(zeta(self.exponent, 2.0)) <= target:
            return 1
        lo, hi = 1, 2
        while float(zeta(self.exponent, hi + 1.0)) > target:
            hi *= 2
            if hi > 10 ** 18:
                break
        while lo < hi:
            mid = (lo + hi) // 2
            if float(zeta(self.exponent, mid + 1.0)) <= target:
                hi = mid
            else:
                lo = mid + 1
        return lo

    def abs_moment(self, i: int, s: float) -> float:
        """E|C_i|**s = i**s * (S_i - S_{i-1}) = i**(s - 1 - delta - eps) / S."""
        if i < 1:
            return 0.0
        return i ** (s - self.exponent) / self.normalizer


CoeffModel = Union[DeterministicCoeffs, GeometricCoeffs, IidScaledCoeffs, RemarkCoeffs]


@dataclass(frozen=True)
class CoeffDraw:
    """One realization C_0..C_K plus certified information about the tail.

    `total` is the full series sum when the tail beyond K is known exactly
    (deterministic formulas, or a spike that landed inside the horizon) and
    the truncated sum otherwise.  `tail_bound` certifies |sum_{j>K} C_j|.
    """

    values: np.ndarray
    total: float
    tail_bound: float

    @property
    def horizon(self) -> int:
        return len(self.values) - 1


def default_horizon(model: CoeffModel, rel_tol: float = 1e-8) -> int:
    """Horizon K with certified tail bound <= rel_tol * (sum_{j<=K} |C_j| + 1)."""
    if isinstance(model, DeterministicCoeffs):
        return len(model.values) - 1
    if isinstance(model, (GeometricCoeffs, IidScaledCoeffs)):
        partial = abs(model.scale)  # lower bound on the eventual absolute sum
        k = 0
        while True:
            tail = abs(model.scale) * model.rho ** (k + 1) / (1.0 - model.rho)
            if tail <= rel_tol * (partial + 1.0):
                return k
            k += 1
    raise ConfigError("no deterministic horizon rule for this model; pass one explicitly")


def draw_coefficients(model: CoeffModel, horizon: int, rng: np.random.Generator) -> CoeffDraw:
    """One coefficient realization over indices 0..horizon."""
    if horizon < 0:
        raise DomainError("horizon must be >= 0")
    k = horizon
    if isinstance(model, DeterministicCoeffs):
        vals = np.zeros(k + 1)
        m = min(k + 1, len(model.values))
        vals[:m] = model.values[:m]
        hidden = model.values[k + 1 :]
        return CoeffDraw(
            values=vals,
            total=exact_sum(model.values),
            tail_bound=float(np.sum(np.abs(hidden))),
        )
    if isinstance(model, GeometricCoeffs):
        vals = model.scale * model.rho ** np.arange(k + 1)
        tail = model.scale * model.rho ** (k + 1) / (1.0 - model.rho)
        return CoeffDraw(values=vals, total=exact_sum(vals) + tail, tail_bound=abs(tail))
    if isinstance(model, IidScaledCoeffs):
        if model.base == "uniform":
            u = rng.random(k + 1)
        else:
            u = np.ones(k + 1)
        vals = model.scale * model.rho ** np.arange(k + 1) * u
        return CoeffDraw(
            values=vals,
            total=exact_sum(vals),
            tail_bound=model.tail_abs_bound(k + 1),
        )
    if isinstance(model, RemarkCoeffs):
        omega = 1.0 - rng.random()  # in (0, 1]
        i = model.spike_index(omega)
        vals = np.zeros(k + 1)
        if i <= k:
            vals[i] = float(i)
            return CoeffDraw(values=vals, total=float(i), tail_bound=0.0)
        return CoeffDraw(values=vals, total=float(i), tail_bound=float(i))
    raise ConfigError(f"unsupported coefficient model {type(model).__name__}")


def check_sandwich(values, slack: float = 1e-12) -> bool:
    """True iff every partial-sum ratio sum_{i<=s} C_i / sum C_i lies in [0, 1].

    Partial sums are accumulated with correctly rounded summation and the
    ratio test allows `slack` rounding leeway.  A zero total makes the ratio
    undefined and raises SandwichIndeterminate rather than returning False.
    """
    arr = np.asarray(values, dtype=np.float64)
    if arr.size == 0:
        raise DomainError("check_sandwich requires at least one value")
    total = exact_sum(arr)
    if total == 0.0:
        raise SandwichIndeterminate("the total coefficient sum is zero")
    for s in range(arr.size):
        ratio = exact_sum(arr[: s + 1]) / total
        if not (-slack <= ratio <= 1.0 + slack):
            return False
    return True


def tail_sum(draw: CoeffDraw, q: int) -> tuple[float, float]:
    """(C'_q, C''_q): the coefficient sums from q on, and strictly past q.

    Both come from the stored total, so C''_q = C'_{q+1} holds exactly and
    the error is certified by the draw's tail bound.
    """
    if not 0 <= q <= draw.horizon:
        raise DomainError(f"q must lie in [0, {draw.horizon}]")
    c_prime = draw.total - exact_sum(draw.values[:q])
    c_dprime = c_prime - draw.values[q]
    return float(c_prime), float(c_dprime)


@dataclass(frozen=True)
class MomentExponents:
    """Probe exponents for the moment diagnostics."""

    delta: float
    gamma: float
    eta: float

    def __post_init__(self):
        if not (0.0 < self.delta <= 1.0):
            raise ConfigError("delta must lie in (0, 1]")
        if not (0.0 < self.gamma < 1.0):
            raise ConfigError("gamma must lie in (0, 1)")
        if not self.eta > 1.0:
            raise ConfigError("eta must exceed 1")


@dataclass(frozen=True)
class DiagnosticsRow:
    n: int
    partial_delta: float
    partial_gamma: float
    cond18: float
    se_delta: float
    se_gamma: float
    se18: float


@dataclass(frozen=True)
class DiagnosticsReport:
    rows: tuple[DiagnosticsRow, ...]
    flags: dict
    threshold: float
    analytic: bool


def _analytic_partial(model: CoeffModel, n: int, s: float) -> float:
    """Sum_{j<=n} E|C_j|**s (closed form; every model here provides one)."""
    if isinstance(model, DeterministicCoeffs):
        return exact_sum([abs(v) ** s for v in model.values[: n + 1]])
    if isinstance(model, (GeometricCoeffs, IidScaledCoeffs)):
        q = model.rho ** s
        base = model.base_moment(s) if isinstance(model, IidScaledCoeffs) else 1.0
        return base * abs(model.scale) ** s * (1.0 - q ** (n + 1)) / (1.0 - q)
    if isinstance(model, RemarkCoeffs):
        e = model.exponent - s
        if e > 1.0:
            return float((zeta(e) - zeta(e, n + 1.0)) / model.normalizer)
        idx = np.arange(1, n + 1, dtype=np.float64)
        return exact_sum(idx ** (-e)) / model.normalizer
    raise ConfigError(f"unsupported coefficient model {type(model).__name__}")


def _analytic_cond18(model: CoeffModel, n: int, exps: MomentExponents) -> float | None:
    """(ln n)**(1+eta) * E[(sum_{i>=n}|C_i|)**(eta-delta) * sum_{j>=n}|C_j|**delta]."""
    log_factor = math.log(n) ** (1.0 + exps.eta) if n > 1 else 0.0
    if isinstance(model, DeterministicCoeffs):
        tail_abs = exact_sum([abs(v) for v in model.values[n:]])
        tail_delta = exact_sum([abs(v) ** exps.delta for v in model.values[n:]])
        return log_factor * tail_abs ** (exps.eta - exps.delta) * tail_delta
    if isinstance(model, GeometricCoeffs):
        tail_abs = model.tail_abs_sum(n, 1.0)
        tail_delta = model.tail_abs_sum(n, exps.delta)
        return log_factor * tail_abs ** (exps.eta - exps.delta) * tail_delta
    return None


def _mc_tails(model: CoeffModel, n: int, exps: MomentExponents, reps: int, rng):
    """Monte-Carlo draws of (sum_{i>=n}|C_i|, sum_{j>=n}|C_j|**delta)."""
    if isinstance(model, IidScaledCoeffs):
        # extend far enough past n that the certified remainder is negligible
        extra = max(64, int(math.ceil(36.0 / -math.log(model.rho))))
        j = np.arange(n, n + extra)
        out_abs = np.empty(reps)
        out_delta = np.empty(reps)
        for rep in range(reps):
            u = rng.random(extra) if model.base == "uniform" else np.ones(extra)
            c = np.abs(model.scale) * model.rho ** j * u
            out_abs[rep] = c.sum()
            out_delta[rep] = (c ** exps.delta).sum()
        return out_abs, out_delta
    if isinstance(model, RemarkCoeffs):
        idx = np.array([model.spike_index(1.0 - rng.random()) for _ in range(reps)], dtype=float)
        hit = idx >= n
        return np.where(hit, idx, 0.0), np.where(hit, idx ** exps.delta, 0.0)
    raise ConfigError("Monte-Carlo tails are only defined for random models")


def _trend_flag(values, threshold: float) -> str:
    diffs = np.diff(values)
    if len(values) >= 3 and np.all(diffs < 0) and values[-1] < threshold:
        return "PASS"
    if len(values) >= 3 and np.all(diffs >= 0) and values[-1] >= threshold:
        return "FAIL"
    return "INCONCLUSIVE"


def _sum_flag(partials, threshold: float) -> str:
    """Convergence flag for a partial-sum sequence over an increasing grid."""
    partials = np.asarray(partials, dtype=np.float64)
    increments = np.diff(partials)
    if len(partials) < 3 or np.any(increments < 0):
        return "INCONCLUSIVE"
    if increments[-1] <= threshold * max(partials[-1], 1.0) and np.all(np.diff(increments) <= 0):
        return "PASS"
    if increments[-1] >= increments[0] > 0:
        return "FAIL"
    return "INCONCLUSIVE"


def moment_diagnostics(
    model: CoeffModel,
    exponents: MomentExponents,
    n_grid,
    mc_reps: int,
    rng: np.random.Generator,
    threshold: float = 0.1,
) -> DiagnosticsReport:
    """Partial moment sums and the tail-product diagnostic over a grid.

    For each n the report carries the partial sums of E|C_j|**delta and
    E|C_j|**gamma up to n, and the (ln n)-weighted tail product whose decay
    is the extra requirement on random coefficient sequences.  Closed forms
    are used where the model provides them, Monte Carlo with standard errors
    otherwise.  The PASS/FAIL flags are trend policy, not a proof: PASS needs
    a monotone-decreasing trend over at least three grid points plus a final
    value below `threshold`.
    """
    if mc_reps <= 0:
        raise ConfigError("mc_reps must be positive")
    n_grid = [int(n) for n in n_grid]
    if any(n2 <= n1 for n1, n2 in zip(n_grid, n_grid[1:])):
        raise ConfigError("n_grid must be strictly increasing")

    rows = []
    analytic = True
    for n in n_grid:
        pd = _analytic_partial(model, n, exponents.delta)
        pg = _analytic_partial(model, n, exponents.gamma)
        c18 = _analytic_cond18(model, n, exponents)
        s18 = 0.0
        if c18 is None:
            analytic = False
            tails_abs, tails_delta = _mc_tails(model, n, exponents, mc_reps, rng)
            prod = tails_abs ** (exponents.eta - exponents.delta) * tails_delta
            log_factor = math.log(n) ** (1.0 + exponents.eta) if n > 1 else 0.0
            c18 = log_factor * float(np.mean(prod))
            s18 = log_factor * float(np.std(prod) / math.sqrt(mc_reps))
        rows.append(
            DiagnosticsRow(
                n=n,
                partial_delta=float(pd),
                partial_gamma=float(pg),
                cond18=float(c18),
                se_delta=0.0,
                se_gamma=0.0,
                se18=s18,
            )
        )

    flags = {
        "delta_sum": _sum_flag([r.partial_delta for r in rows], threshold),
        "gamma_sum": _sum_flag([r.partial_gamma for r in rows], threshold),
        "cond18": _trend_flag([r.cond18 for r in rows], threshold),
    }
    return DiagnosticsReport(rows=tuple(rows), flags=flags, threshold=threshold, analytic=analytic)


_MODEL_TAGS = {
    "deterministic": DeterministicCoeffs,
    "geometric": GeometricCoeffs,
    "iid_scaled": IidScaledCoeffs,
    "remark": RemarkCoeffs,
}


def coeff_model_to_dict(model: CoeffModel) -> dict:
    if isinstance(model, DeterministicCoeffs):
        return {"kind": "deterministic", "values": list(model.values)}
    if isinstance(model, GeometricCoeffs):
        return {"kind": "geometric", "rho": model.rho, "scale": model.scale}
    if isinstance(model, IidScaledCoeffs):
        return {"kind": "iid_scaled", "rho": model.rho, "scale": model.scale, "base": model.base}
    if isinstance(model, RemarkCoeffs):
        return {"kind": "remark", "delta": model.delta, "eps": model.eps, "gamma": model.gamma}
    raise ConfigError(f"unsupported coefficient model {type(model).__name__}")


def coeff_model_from_dict(d: dict) -> CoeffModel:
    kind = d.get("kind")
    if kind not in _MODEL_TAGS:
        raise ConfigError(f"unknown coefficient model kind {kind!r}")
    args = {k: v for k, v in d.items() if k != "kind"}
    if kind == "deterministic":
        args["values"] = tuple(args["values"])
    return _MODEL_TAGS[kind](**args)
