"""Batch command-line interface.

Subcommands mirror the harness experiments (`fclt`, `metric-gap`,
`appendix`, `check-coeffs`, `karamata`), plus `metric` for the distance
between two path CSV files and `simulate-path` to write sample paths.
Every experiment writes `report.json` and a tidy CSV table to the output
directory.  Exit status: 0 when the configured thresholds pass, 2 when they
fail, 1 on error.
"""

from __future__ import annotations

import argparse
import sys
from pathlib import Path

import numpy as np

from . import harness
from .errors import MafcltError
from .harness import ExperimentConfig
from .m2_metric import d_m2, d_uniform
from .ma_paths import InnovationWindow, StepPath, build_ma_series, partial_sum_path
from .coefficients import draw_coefficients
from .stable_limit import CharTriple, sample_levy_path
from .tails import normalizer_a, sample_innovations


class _Parser(argparse.ArgumentParser):
    def error(self, message):  # usage problems are errors, not FAIL verdicts
        self.print_usage(sys.stderr)
        raise SystemExit(1)


def _add_common(sub):
    sub.add_argument("--config", required=True, help="JSON experiment config")
    sub.add_argument("--seed", type=int, default=None, help="override the config seed")
    sub.add_argument("--out", default=None, help="output directory")
    sub.add_argument("--workers", type=int, default=1, help="parallel workers")


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="mafclt", description=__doc__)
    subs = parser.add_subparsers(dest="command", required=True)

    for name in ("fclt", "metric-gap", "appendix", "check-coeffs", "karamata", "simulate-path"):
        sub = subs.add_parser(name)
        _add_common(sub)

    metric = subs.add_parser("metric", help="distance between two path CSV files")
    metric.add_argument("path_a")
    metric.add_argument("path_b")
    metric.add_argument("--tol", type=float, default=1e-6)
    metric.add_argument("--out", default=None)
    return parser


def _load_config(args) -> ExperimentConfig:
    cfg = ExperimentConfig.from_json(args.config)
    if args.seed is not None:
        cfg = ExperimentConfig.from_dict({**cfg.to_dict(), "seed": args.seed})
    return cfg


def _out_dir(args, cfg: ExperimentConfig | None) -> Path:
    if args.out is not None:
        return Path(args.out)
    if cfg is not None and cfg.output_dir:
        return Path(cfg.output_dir)
    return Path("mafclt-out")


def _finish(report, out_dir: Path) -> int:
    path = report.write(out_dir)
    for row in report.rows:
        fields = ", ".join(f"{k}={v}" for k, v in row.items())
        print(fields)
    print(f"{report.experiment}: {'PASS' if report.passed else 'FAIL'} ({path})")
    return 0 if report.passed else 2


def _simulate_paths(cfg: ExperimentConfig, out_dir: Path) -> int:
    out_dir.mkdir(parents=True, exist_ok=True)
    n = cfg.n_grid[-1]
    horizon = cfg.resolved_horizon()
    rng = np.random.default_rng(np.random.SeedSequence(entropy=cfg.seed, spawn_key=(0,)))
    draw = draw_coefficients(cfg.coeffs, horizon, rng)
    z = sample_innovations(cfg.tail, n + horizon, rng)
    window = InnovationWindow(first_index=1 - horizon, z=z)
    v_n = partial_sum_path(build_ma_series(draw, window, n), normalizer_a(cfg.tail, n))
    v_n.to_csv(out_dir / "partial_sum_path.csv")
    triple = CharTriple(cfg.tail.alpha, p=cfg.tail.p, r=cfg.tail.r)
    limit_path = sample_levy_path(triple, n, rng).scaled(draw.total)
    limit_path.to_csv(out_dir / "limit_path.csv")
    print(f"wrote {out_dir / 'partial_sum_path.csv'} and {out_dir / 'limit_path.csv'}")
    return 0


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        if args.command == "metric":
            pa = StepPath.from_csv(args.path_a)
            pb = StepPath.from_csv(args.path_b)
            dm2 = d_m2(pa, pb, args.tol)
            du = d_uniform(pa, pb)
            print(f"d_m2={dm2!r}")
            print(f"d_uniform={du!r}")
            if args.out:
                out = Path(args.out)
                out.mkdir(parents=True, exist_ok=True)
                (out / "metric.csv").write_text(
                    "statistic,value\nd_m2,{!r}\nd_uniform,{!r}\n".format(dm2, du)
                )
            return 0

        cfg = _load_config(args)
        out_dir = _out_dir(args, cfg)
        if args.command == "fclt":
            return _finish(harness.run_fclt_experiment(cfg, workers=args.workers), out_dir)
        if args.command == "metric-gap":
            return _finish(harness.run_metric_gap_experiment(cfg, workers=args.workers), out_dir)
        if args.command == "appendix":
            return _finish(harness.run_appendix_check(cfg.tail, cfg.n_grid), out_dir)
        if args.command == "check-coeffs":
            return _finish(harness.run_coefficient_checks(cfg), out_dir)
        if args.command == "karamata":
            return _finish(harness.run_karamata_table(cfg), out_dir)
        if args.command == "simulate-path":
            return _simulate_paths(cfg, out_dir)
        raise MafcltError(f"unknown command {args.command}")
    except MafcltError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    except OSError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
