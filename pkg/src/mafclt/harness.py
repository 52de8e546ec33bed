"""Batch Monte-Carlo experiments at desk scale.

Three experiments probe the convergence statements that are checkable by
simulation:

* `run_fclt_experiment` compares the partial-sum endpoint against the
  product of an independent coefficient total and a stable marginal draw,
  by the two-sample KS statistic.
* `run_metric_gap_experiment` couples the partial-sum path with the scaled
  innovation path on the same innovations and tracks quantiles of their M2
  distance as n grows.
* `run_appendix_check` evaluates the closed-form rate n * q_n**2 *
  P(|Z| > a_n / q_n)**2 along a grid, with q_n = floor(n**(1/10)).

Every replication derives its own random stream from (master seed, an
experiment tag, n, replication index), so reports are byte-identical for a
given config and seed regardless of how replications are scheduled across
workers.
"""

from __future__ import annotations

import csv
import json
import math
import time
import zlib
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from ._sums import exact_sum
from .coefficients import (
    CoeffModel,
    MomentExponents,
    check_sandwich,
    coeff_model_from_dict,
    coeff_model_to_dict,
    default_horizon,
    draw_coefficients,
    moment_diagnostics,
)
from .errors import ConfigError, DomainError, SandwichIndeterminate
from .m2_metric import d_m2, d_uniform
from .ma_paths import InnovationWindow, build_ma_series, partial_sum_path, truncated_ma_series
from .stable_limit import CharTriple, sample_stable_many
from .tails import TailSpec, normalizer_a, sample_innovations, tail_prob, truncated_moment

__all__ = [
    "QSchedule",
    "ExperimentConfig",
    "Report",
    "ks_two_sample",
    "paper_q",
    "run_fclt_experiment",
    "run_metric_gap_experiment",
    "run_appendix_check",
    "ASSUMPTION_LOG",
]

ASSUMPTION_LOG = [
    "innovation law: two-sided Pareto-type tail min(1, c*x^-alpha*l(x)); a "
    "concrete modeling choice, only regular variation of the tail is assumed "
    "by the theory being checked",
    "limit exponent uses the truncation function x*1{|x|<=1}; the matching "
    "drift constant makes the compensator cancel",
    "KS and metric-gap pass thresholds are desk-scale policy calibrated by "
    "two-sample critical values, not limits taken from theory",
]


def ks_two_sample(a, b) -> float:
    """Two-sample Kolmogorov-Smirnov statistic, exact over pooled points."""
    a = np.sort(np.asarray(a, dtype=np.float64))
    b = np.sort(np.asarray(b, dtype=np.float64))
    if a.size == 0 or b.size == 0:
        raise DomainError("ks_two_sample requires nonempty samples")
    pooled = np.concatenate([a, b])
    fa = np.searchsorted(a, pooled, side="right") / a.size
    fb = np.searchsorted(b, pooled, side="right") / b.size
    return float(np.max(np.abs(fa - fb)))


def ks_critical_value(n1: int, n2: int, coefficient: float = 1.358) -> float:
    """Asymptotic two-sample KS critical value (5% level by default)."""
    return coefficient * math.sqrt((n1 + n2) / (n1 * n2))


def paper_q(n: int) -> int:
    """The truncation schedule floor(n**(1/10)), computed exactly on integers."""
    if n < 1:
        raise DomainError("n must be >= 1")
    q = max(1, int(round(n ** 0.1)))
    while (q + 1) ** 10 <= n:
        q += 1
    while q ** 10 > n:
        q -= 1
    return max(1, q)


@dataclass(frozen=True)
class QSchedule:
    """Truncation-lag schedule: a fixed q or the n**(1/10) rule."""

    kind: str = "paper"
    q: int | None = None

    def __post_init__(self):
        if self.kind not in ("paper", "fixed"):
            raise ConfigError("q_schedule kind must be 'paper' or 'fixed'")
        if self.kind == "fixed" and (self.q is None or self.q < 0):
            raise ConfigError("fixed schedule needs q >= 0")

    def at(self, n: int) -> int:
        return paper_q(n) if self.kind == "paper" else int(self.q)


@dataclass(frozen=True)
class ExperimentConfig:
    tail: TailSpec
    coeffs: CoeffModel
    n_grid: tuple[int, ...]
    reps: int = 100
    seed: int = 0
    q_schedule: QSchedule = field(default_factory=QSchedule)
    metric_tol: float = 1e-4
    horizon: int | None = None
    ks_threshold: float | None = None  # None: 5% critical value plus slack
    gap_threshold: float = 0.1
    exponents: MomentExponents | None = None
    output_dir: str | None = None

    def __post_init__(self):
        if self.reps < 2:
            raise ConfigError("reps must be >= 2")
        grid = tuple(int(n) for n in self.n_grid)
        if len(grid) == 0 or any(b <= a for a, b in zip(grid, grid[1:])):
            raise ConfigError("n_grid must be nonempty and strictly increasing")
        object.__setattr__(self, "n_grid", grid)
        if not self.metric_tol > 0:
            raise ConfigError("metric_tol must be positive")

    def resolved_horizon(self) -> int:
        return self.horizon if self.horizon is not None else default_horizon(self.coeffs)

    def to_dict(self) -> dict:
        return {
            "tail": self.tail.to_dict(),
            "coeffs": coeff_model_to_dict(self.coeffs),
            "n_grid": list(self.n_grid),
            "reps": self.reps,
            "seed": self.seed,
            "q_schedule": {"kind": self.q_schedule.kind, "q": self.q_schedule.q},
            "metric_tol": self.metric_tol,
            "horizon": self.horizon,
            "ks_threshold": self.ks_threshold,
            "gap_threshold": self.gap_threshold,
            "exponents": (
                None
                if self.exponents is None
                else {
                    "delta": self.exponents.delta,
                    "gamma": self.exponents.gamma,
                    "eta": self.exponents.eta,
                }
            ),
            "output_dir": self.output_dir,
        }

    @staticmethod
    def from_dict(d: dict) -> "ExperimentConfig":
        qs = d.get("q_schedule") or {}
        exps = d.get("exponents")
        return ExperimentConfig(
            tail=TailSpec.from_dict(d["tail"]),
            coeffs=coeff_model_from_dict(d["coeffs"]),
            n_grid=tuple(int(n) for n in d["n_grid"]),
            reps=int(d.get("reps", 100)),
            seed=int(d.get("seed", 0)),
            q_schedule=QSchedule(kind=qs.get("kind", "paper"), q=qs.get("q")),
            metric_tol=float(d.get("metric_tol", 1e-4)),
            horizon=d.get("horizon"),
            ks_threshold=d.get("ks_threshold"),
            gap_threshold=float(d.get("gap_threshold", 0.1)),
            exponents=None if exps is None else MomentExponents(**exps),
            output_dir=d.get("output_dir"),
        )

    @staticmethod
    def from_json(path) -> "ExperimentConfig":
        with open(path) as fh:
            return ExperimentConfig.from_dict(json.load(fh))


@dataclass
class Report:
    """Per-grid-point results of one experiment plus run metadata.

    The deterministic payload (everything except wall time) is byte-stable
    for a fixed config and seed.
    """

    experiment: str
    config: dict
    rows: list
    passed: bool
    assumption_log: list
    seed: int
    wall_time_s: float

    def canonical_dict(self) -> dict:
        return {
            "experiment": self.experiment,
            "config": self.config,
            "rows": self.rows,
            "passed": self.passed,
            "assumption_log": self.assumption_log,
            "seed": self.seed,
        }

    def to_json(self) -> str:
        payload = self.canonical_dict()
        payload["meta"] = {"wall_time_s": self.wall_time_s}
        return json.dumps(payload, indent=2, sort_keys=True)

    def write(self, out_dir) -> Path:
        out = Path(out_dir)
        out.mkdir(parents=True, exist_ok=True)
        (out / "report.json").write_text(self.to_json() + "\n")
        table = out / f"{self.experiment}.csv"
        with open(table, "w", newline="") as fh:
            writer = csv.writer(fh)
            writer.writerow(["n", "statistic", "value"])
            for row in self.rows:
                n = row.get("n")
                for key, value in row.items():
                    if key != "n":
                        writer.writerow([n, key, repr(value)])
        return out / "report.json"


def _substream(seed: int, tag: str, *indices: int) -> np.random.Generator:
    """Independent generator keyed by (seed, tag, indices), scheduling-free."""
    key = (zlib.crc32(tag.encode()),) + tuple(int(i) % (2 ** 32) for i in indices)
    return np.random.default_rng(np.random.SeedSequence(entropy=seed, spawn_key=key))


def _chunks(total: int, pieces: int):
    """Split range(total) into at most `pieces` contiguous chunks."""
    size = max(1, math.ceil(total / max(1, pieces)))
    return [(lo, min(total, lo + size)) for lo in range(0, total, size)]


def _fclt_sim_chunk(cfg_dict: dict, n: int, lo: int, hi: int) -> list:
    cfg = ExperimentConfig.from_dict(cfg_dict)
    horizon = cfg.resolved_horizon()
    a_n = normalizer_a(cfg.tail, n)
    out = []
    for rep in range(lo, hi):
        rng = _substream(cfg.seed, "fclt-sim", n, rep)
        draw = draw_coefficients(cfg.coeffs, horizon, rng)
        z = sample_innovations(cfg.tail, n + horizon, rng)
        window = InnovationWindow(first_index=1 - horizon, z=z)
        # endpoint only: the filtered series summed over i <= n
        out.append(exact_sum(build_ma_series(draw, window, n)) / a_n)
    return out


def _fclt_ref_chunk(cfg_dict: dict, n: int, lo: int, hi: int) -> list:
    cfg = ExperimentConfig.from_dict(cfg_dict)
    horizon = cfg.resolved_horizon()
    triple = CharTriple(cfg.tail.alpha, p=cfg.tail.p, r=cfg.tail.r)
    out = []
    for rep in range(lo, hi):
        rng = _substream(cfg.seed, "fclt-ref", n, rep)
        draw = draw_coefficients(cfg.coeffs, horizon, rng)
        stable = float(sample_stable_many(triple, 1, rng)[0])
        out.append(draw.total * stable)
    return out


def _gap_chunk(cfg_dict: dict, n: int, lo: int, hi: int) -> list:
    cfg = ExperimentConfig.from_dict(cfg_dict)
    horizon = cfg.resolved_horizon()
    a_n = normalizer_a(cfg.tail, n)
    q_n = min(cfg.q_schedule.at(n), horizon)
    out = []
    for rep in range(lo, hi):
        rng = _substream(cfg.seed, "gap", n, rep)
        draw = draw_coefficients(cfg.coeffs, horizon, rng)
        z = sample_innovations(cfg.tail, n + horizon, rng)
        window = InnovationWindow(first_index=1 - horizon, z=z)
        v_n = partial_sum_path(build_ma_series(draw, window, n), a_n)
        scaled_z = truncated_ma_series(draw, 0, window, n)  # C * Z_i, same innovations
        v_z = partial_sum_path(scaled_z, a_n)
        gap = d_m2(v_z, v_n, cfg.metric_tol)
        uniform = d_uniform(v_z, v_n)
        x_trunc = truncated_ma_series(draw, q_n, window, n)
        v_trunc = partial_sum_path(x_trunc, a_n)
        gap_trunc = d_m2(v_trunc, v_n, cfg.metric_tol)
        out.append((gap, uniform, gap_trunc))
    return out


def _run_chunked(worker, cfg: ExperimentConfig, n: int, workers: int):
    cfg_dict = cfg.to_dict()
    spans = _chunks(cfg.reps, workers * 4 if workers > 1 else 1)
    if workers <= 1:
        parts = [worker(cfg_dict, n, lo, hi) for lo, hi in spans]
    else:
        with ProcessPoolExecutor(max_workers=workers) as pool:
            futures = [pool.submit(worker, cfg_dict, n, lo, hi) for lo, hi in spans]
            parts = [f.result() for f in futures]
    merged = []
    for part in parts:  # spans are in replication order
        merged.extend(part)
    return merged


def run_fclt_experiment(cfg: ExperimentConfig, workers: int = 1) -> Report:
    """Endpoint-in-law check: KS between V_n(1) draws and C-tilde * V(1) draws.

    The reference sample multiplies a fresh coefficient draw (independent of
    the stable draw within its own stream) so the coefficient total and the
    limit marginal are independent, as in the limit statement.
    """
    t0 = time.time()
    rows = []
    passed = True
    for n in cfg.n_grid:
        sim = _run_chunked(_fclt_sim_chunk, cfg, n, workers)
        ref = _run_chunked(_fclt_ref_chunk, cfg, n, workers)
        ks = ks_two_sample(sim, ref)
        threshold = (
            cfg.ks_threshold
            if cfg.ks_threshold is not None
            else ks_critical_value(len(sim), len(ref)) + 0.007
        )
        ok = ks <= threshold
        passed = passed and ok
        rows.append(
            {
                "n": n,
                "ks": ks,
                "ks_threshold": threshold,
                "pass": bool(ok),
                "sim_median": float(np.median(sim)),
                "ref_median": float(np.median(ref)),
            }
        )
    return Report(
        experiment="fclt",
        config=cfg.to_dict(),
        rows=rows,
        passed=passed,
        assumption_log=list(ASSUMPTION_LOG),
        seed=cfg.seed,
        wall_time_s=time.time() - t0,
    )


def run_metric_gap_experiment(cfg: ExperimentConfig, workers: int = 1) -> Report:
    """Quantiles of d_M2(C V_n^Z, V_n) on coupled paths, per grid point.

    Passing requires the median gap to shrink from the first grid point to
    the last and to end below the configured threshold.
    """
    t0 = time.time()
    rows = []
    for n in cfg.n_grid:
        trip = _run_chunked(_gap_chunk, cfg, n, workers)
        gaps = np.array([g for g, _, _ in trip])
        uniforms = np.array([u for _, u, _ in trip])
        gap_trunc = np.array([gt for _, _, gt in trip])
        rows.append(
            {
                "n": n,
                "gap_q25": float(np.quantile(gaps, 0.25)),
                "gap_q50": float(np.quantile(gaps, 0.50)),
                "gap_q90": float(np.quantile(gaps, 0.90)),
                "gap_max": float(gaps.max()),
                "uniform_q50": float(np.quantile(uniforms, 0.50)),
                "gap_trunc_q50": float(np.quantile(gap_trunc, 0.50)),
                "q_n": int(min(cfg.q_schedule.at(n), cfg.resolved_horizon())),
            }
        )
    medians = [row["gap_q50"] for row in rows]
    passed = bool(
        len(medians) >= 1
        and medians[-1] <= cfg.gap_threshold
        and (len(medians) == 1 or medians[-1] < medians[0])
    )
    return Report(
        experiment="metric-gap",
        config=cfg.to_dict(),
        rows=rows,
        passed=passed,
        assumption_log=list(ASSUMPTION_LOG),
        seed=cfg.seed,
        wall_time_s=time.time() - t0,
    )


def run_appendix_check(tail: TailSpec, n_grid) -> Report:
    """The closed-form rate n * q_n^2 * P(|Z| > a_n/q_n)^2 along a grid.

    Defined for tail index in [1, 2); no sampling is involved.  For the
    constant slowly-varying factor the report also carries the analytic
    reduction q_n**(2 + 2 alpha) / n.
    """
    t0 = time.time()
    if not 1.0 <= tail.alpha < 2.0:
        raise DomainError("the rate statement needs alpha in [1, 2)")
    rows = []
    values = []
    for n in n_grid:
        n = int(n)
        q = paper_q(n)
        a = normalizer_a(tail, n)
        value = n * q ** 2 * tail_prob(tail, a / q) ** 2
        row = {"n": n, "q_n": q, "a_n": a, "value": value}
        if tail.sv.kind == "constant":
            row["reduction"] = q ** (2.0 + 2.0 * tail.alpha) / n
        rows.append(row)
        values.append(value)
    passed = all(b < a for a, b in zip(values, values[1:]))
    return Report(
        experiment="appendix",
        config={"tail": tail.to_dict(), "n_grid": [int(n) for n in n_grid]},
        rows=rows,
        passed=passed,
        assumption_log=list(ASSUMPTION_LOG),
        seed=0,
        wall_time_s=time.time() - t0,
    )


def run_coefficient_checks(cfg: ExperimentConfig) -> Report:
    """Sandwich check on a coefficient draw plus the moment diagnostics."""
    t0 = time.time()
    rng = _substream(cfg.seed, "coeffs", 0)
    draw = draw_coefficients(cfg.coeffs, cfg.resolved_horizon(), rng)
    try:
        sandwich = check_sandwich(draw.values)
        sandwich_state = "ok" if sandwich else "violated"
    except SandwichIndeterminate:
        sandwich = False
        sandwich_state = "indeterminate"
    alpha = cfg.tail.alpha
    exps = cfg.exponents or MomentExponents(
        delta=min(1.0, 0.75 * alpha),
        gamma=min(0.95, 0.5 + 0.5 * min(alpha, 1.0) * 0.9),
        eta=max(1.5, alpha + 0.3),
    )
    diag = moment_diagnostics(
        cfg.coeffs, exps, n_grid=cfg.n_grid, mc_reps=cfg.reps, rng=_substream(cfg.seed, "diag", 1)
    )
    rows = [
        {
            "n": r.n,
            "partial_delta": r.partial_delta,
            "partial_gamma": r.partial_gamma,
            "cond18": r.cond18,
            "se18": r.se18,
        }
        for r in diag.rows
    ]
    rows.append({"n": 0, "sandwich": sandwich_state, **{f"flag_{k}": v for k, v in diag.flags.items()}})
    passed = sandwich_state == "ok" and diag.flags["delta_sum"] != "FAIL"
    return Report(
        experiment="check-coeffs",
        config=cfg.to_dict(),
        rows=rows,
        passed=passed,
        assumption_log=list(ASSUMPTION_LOG),
        seed=cfg.seed,
        wall_time_s=time.time() - t0,
    )


def run_karamata_table(cfg: ExperimentConfig) -> Report:
    """Truncated-moment table over the grid with the two probe exponents."""
    t0 = time.time()
    alpha = cfg.tail.alpha
    le_exp = 1.3 * alpha  # far enough above alpha that n^(1 - le/alpha) dies fast
    gt_exp = alpha / 2.0
    if cfg.exponents is not None:
        if cfg.exponents.gamma > alpha:
            le_exp = cfg.exponents.gamma
        if cfg.exponents.delta < alpha:
            gt_exp = cfg.exponents.delta
    rows = []
    for n in cfg.n_grid:
        rows.append(
            {
                "n": int(n),
                "le_exponent": le_exp,
                "le_value": truncated_moment(cfg.tail, int(n), le_exp, "le"),
                "le_limit": alpha / (le_exp - alpha),
                "gt_exponent": gt_exp,
                "gt_value": truncated_moment(cfg.tail, int(n), gt_exp, "gt"),
                "gt_limit": alpha / (alpha - gt_exp),
            }
        )
    final = rows[-1]
    passed = bool(
        abs(final["le_value"] - final["le_limit"]) <= 0.05 * final["le_limit"]
        and abs(final["gt_value"] - final["gt_limit"]) <= 0.05 * final["gt_limit"]
    )
    return Report(
        experiment="karamata",
        config=cfg.to_dict(),
        rows=rows,
        passed=passed,
        assumption_log=list(ASSUMPTION_LOG),
        seed=cfg.seed,
        wall_time_s=time.time() - t0,
    )
