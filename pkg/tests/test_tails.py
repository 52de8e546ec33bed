import math

import numpy as np
import pytest
from scipy import integrate

from mafclt.errors import DomainError, EstimationError
from mafclt.tails import (
    SlowVariation,
    TailSpec,
    centering_constant,
    normalizer_a,
    quantile,
    sample_innovations,
    tail_balance_estimate,
    tail_prob,
    truncated_mean,
    truncated_moment,
)


def pareto_spec(alpha, p=0.5, c=1.0, x_min=1.0, centered=None):
    return TailSpec(alpha=alpha, p=p, r=1.0 - p, sv=SlowVariation.constant(c), x_min=x_min, centered=centered)


def log_spec(alpha, beta, c=1.0, x_min=1.0, p=0.5):
    return TailSpec(alpha=alpha, p=p, r=1.0 - p, sv=SlowVariation.log_power(beta, c), x_min=x_min)


class TestConstruction:
    def test_rejects_boundary_alpha(self):
        for alpha in (0.0, 2.0, -0.3, 2.4):
            with pytest.raises(DomainError):
                pareto_spec(alpha)

    def test_alpha_one_forces_symmetry(self):
        with pytest.raises(DomainError):
            pareto_spec(1.0, p=0.7)
        spec = pareto_spec(1.0)
        assert spec.symmetric and spec.p == spec.r == 0.5

    def test_alpha_above_one_forces_centering(self):
        assert pareto_spec(1.5).centered
        with pytest.raises(DomainError):
            TailSpec(alpha=1.5, centered=False)
        with pytest.raises(DomainError):
            TailSpec(alpha=0.5, centered=True)

    def test_balance_must_sum_to_one(self):
        with pytest.raises(DomainError):
            TailSpec(alpha=0.5, p=0.6, r=0.6)

    def test_log_beta_must_stay_below_alpha(self):
        with pytest.raises(DomainError):
            log_spec(1.0, beta=1.0)

    def test_dict_round_trip(self):
        spec = log_spec(1.5, beta=0.5, c=2.0, x_min=0.5)
        assert TailSpec.from_dict(spec.to_dict()) == spec


class TestTailProb:
    def test_pareto_closed_form(self):
        spec = pareto_spec(0.5, p=1.0, centered=False)
        assert tail_prob(spec, 4.0) == pytest.approx(0.5, abs=0.0)

    def test_below_cutoff_is_one(self):
        spec = pareto_spec(0.5, x_min=1.0, centered=False)
        assert tail_prob(spec, 0.5) == 1.0

    def test_log_factor_direct_evaluation(self):
        spec = log_spec(1.5, beta=1.0, x_min=math.e)
        assert tail_prob(spec, math.e ** 2) == pytest.approx(2.0 * math.exp(-3.0), rel=1e-12)

    def test_rejects_nonpositive_x(self):
        with pytest.raises(DomainError):
            tail_prob(pareto_spec(0.5), 0.0)

    def test_monotone_bounded_random_pairs(self):
        rng = np.random.default_rng(7)
        for _ in range(1000):
            alpha = rng.uniform(0.1, 1.9)
            if rng.random() < 0.5:
                spec = pareto_spec(alpha, c=rng.uniform(0.2, 5.0), x_min=rng.uniform(0.2, 3.0))
            else:
                spec = log_spec(alpha, beta=rng.uniform(0.0, 0.9) * alpha, x_min=rng.uniform(0.2, 3.0))
            x1 = rng.uniform(0.01, 50.0)
            x2 = x1 + rng.uniform(0.0, 50.0)
            t1, t2 = tail_prob(spec, x1), tail_prob(spec, x2)
            assert 0.0 <= t2 <= t1 <= 1.0


class TestQuantile:
    def test_pareto_quantile_closed_form(self):
        spec = pareto_spec(0.5, p=1.0, centered=False)
        assert quantile(spec, 0.25) == pytest.approx(16.0, rel=1e-14)

    def test_round_trip(self):
        rng = np.random.default_rng(11)
        specs = [
            pareto_spec(0.5, p=1.0, centered=False),
            pareto_spec(1.5, p=1.0, c=2.0),
            log_spec(0.8, beta=0.4, p=1.0),
            log_spec(1.7, beta=1.0, c=0.7, x_min=0.8, p=1.0),
        ]
        for spec in specs:
            for u in rng.uniform(1e-9, tail_prob(spec, spec.x_min) * 0.999, size=50):
                x = quantile(spec, float(u))
                assert tail_prob(spec, x) == pytest.approx(u, rel=1e-9)

    def test_atom_clamps_to_cutoff(self):
        # Support floor above the continuity point puts an atom at x_min.
        spec = pareto_spec(1.5, x_min=2.0)
        assert tail_prob(spec, 2.0) == pytest.approx(2.0 ** -1.5)
        assert quantile(spec, 0.9) == 2.0


class TestSampling:
    def test_centering_constant_pareto_mean(self):
        # One-sided Pareto(1.5): mean alpha/(alpha-1) by the closed-form integral.
        spec = pareto_spec(1.5, p=1.0)
        assert centering_constant(spec) == pytest.approx(3.0, rel=1e-12)

    def test_centering_constant_matches_quadrature_log(self):
        # Independent oracle: E|Z| = int_0^1 Q(u) du, computed through the
        # quantile function with the substitution u = exp(-v).
        spec = log_spec(1.5, beta=0.5, p=1.0)
        mean_quad, _ = integrate.quad(
            lambda v: quantile(spec, max(math.exp(-v), 5e-324)) * math.exp(-v),
            0.0,
            600.0,
            limit=800,
        )
        assert centering_constant(spec) == pytest.approx(mean_quad, rel=1e-6)

    def test_symmetric_sign_frequency(self):
        spec = pareto_spec(1.0)
        z = sample_innovations(spec, 100_000, np.random.default_rng(3))
        assert abs(np.mean(z > 0) - 0.5) < 0.01

    def test_centered_sample_mean_is_near_zero(self):
        spec = pareto_spec(1.8, p=0.8)
        z = sample_innovations(spec, 200_000, np.random.default_rng(5))
        # alpha = 1.8 has finite variance of order sigma^2; mean settles slowly but surely
        assert abs(np.mean(z)) < 0.1

    def test_uncentered_magnitudes_respect_cutoff(self):
        spec = pareto_spec(0.5, p=1.0, centered=False, x_min=2.0, c=2.0 ** 0.5)
        z = sample_innovations(spec, 1000, np.random.default_rng(9))
        assert np.all(z >= 2.0)


class TestNormalizer:
    def test_pareto_closed_form(self):
        spec = pareto_spec(0.5, centered=False)
        assert normalizer_a(spec, 16) == pytest.approx(256.0, rel=1e-14)

    def test_n_one_boundary(self):
        spec = pareto_spec(0.5, centered=False)
        assert normalizer_a(spec, 1) == 1.0

    def test_log_residual(self):
        spec = log_spec(1.5, beta=1.0)
        a = normalizer_a(spec, 10_000)
        assert abs(10_000 * tail_prob(spec, a) - 1.0) <= 1e-10

    def test_residual_across_specs(self):
        specs = [
            pareto_spec(0.5, centered=False),
            pareto_spec(1.2, c=3.0, x_min=0.5),
            log_spec(0.9, beta=0.5),
            log_spec(1.7, beta=1.2, c=2.0),
        ]
        for spec in specs:
            for n in (1, 10, 1000, 10 ** 6):
                a = normalizer_a(spec, n)
                assert abs(n * tail_prob(spec, a) - 1.0) <= 1e-8


class TestTruncatedMoments:
    def test_le_limit_alpha_07(self):
        spec = pareto_spec(0.7, centered=False)
        value = truncated_moment(spec, 10 ** 8, 0.9, "le")
        assert value == pytest.approx(0.7 / 0.2, rel=0.02)

    def test_gt_limit_alpha_15(self):
        spec = pareto_spec(1.5)
        value = truncated_moment(spec, 10 ** 8, 1.0, "gt")
        assert value == pytest.approx(1.5 / 0.5, rel=0.02)

    def test_gt_limit_alpha_one(self):
        spec = pareto_spec(1.0)
        value = truncated_moment(spec, 10 ** 8, 0.5, "gt")
        assert value == pytest.approx(2.0, rel=0.02)

    def test_wrong_side_rejected(self):
        spec = pareto_spec(1.5)
        with pytest.raises(DomainError):
            truncated_moment(spec, 100, 1.2, "le")
        with pytest.raises(DomainError):
            truncated_moment(spec, 100, 1.7, "gt")

    def test_monotone_in_n_toward_limit(self):
        spec = pareto_spec(0.7, centered=False)
        limit = 0.7 / 0.2
        values = [truncated_moment(spec, n, 0.9, "le") for n in (10, 100, 10 ** 4, 10 ** 6)]
        gaps = [limit - v for v in values]
        assert all(g >= -1e-12 for g in gaps)
        assert all(g2 <= g1 + 1e-12 for g1, g2 in zip(gaps, gaps[1:]))

    def test_constant_closed_form_vs_quadrature_oracle(self):
        # Independent oracle: integrate the Pareto density directly.
        spec = pareto_spec(1.4, c=2.0, x_min=1.5)
        n = 1000
        a = normalizer_a(spec, n)
        x_lo = max(spec.x_min, spec.sv.c ** (1.0 / spec.alpha))
        atom = max(0.0, 1.0 - spec.sv.c * spec.x_min ** -spec.alpha)

        def density(x):
            return spec.alpha * spec.sv.c * x ** (-spec.alpha - 1.0)

        for s, side in ((1.9, "le"), (0.8, "gt")):
            if side == "le":
                body, _ = integrate.quad(lambda x: x ** s * density(x), x_lo, a, limit=300)
                oracle = n * a ** -s * (atom * spec.x_min ** s + body)
            else:
                body, _ = integrate.quad(lambda x: x ** s * density(x), a, np.inf, limit=300)
                oracle = n * a ** -s * body
            assert truncated_moment(spec, n, s, side) == pytest.approx(oracle, rel=1e-8)

    def test_log_factor_karamata_limits(self):
        # The log factor slows convergence to O(beta / ln a_n); check the
        # approach is monotone and within 5% by n = 1e30.
        spec = log_spec(0.7, beta=0.3)
        v10 = truncated_moment(spec, 10 ** 10, 0.9, "le")
        v30 = truncated_moment(spec, 10 ** 30, 0.9, "le")
        assert abs(3.5 - v30) < abs(3.5 - v10)
        assert v30 == pytest.approx(0.7 / 0.2, rel=0.05)
        spec2 = log_spec(1.5, beta=0.8)
        w10 = truncated_moment(spec2, 10 ** 10, 1.0, "gt")
        w30 = truncated_moment(spec2, 10 ** 30, 1.0, "gt")
        assert abs(3.0 - w30) < abs(3.0 - w10)
        assert w30 == pytest.approx(1.5 / 0.5, rel=0.05)


class TestTruncatedMean:
    def test_drift_limits(self):
        spec = pareto_spec(0.5, p=1.0, centered=False)
        assert truncated_mean(spec, 10 ** 8, "le") == pytest.approx(0.5 / 0.5, rel=0.02)
        spec2 = pareto_spec(1.5, p=1.0)
        assert truncated_mean(spec2, 10 ** 8, "gt") == pytest.approx(1.0 * 1.5 / 0.5, rel=0.02)

    def test_symmetric_is_zero(self):
        assert truncated_mean(pareto_spec(1.0), 1000, "le") == 0.0


class TestTailBalance:
    def test_all_positive(self):
        assert tail_balance_estimate([1.0, 2.0, 5.0], 0.5) == (1.0, 0.0)

    def test_exact_symmetry(self):
        rng = np.random.default_rng(2)
        half = rng.uniform(1.0, 10.0, size=500)
        sample = np.concatenate([half, -half])
        p_hat, r_hat = tail_balance_estimate(sample, 0.99)
        assert p_hat == 0.5 and r_hat == 0.5

    def test_monte_carlo_recovers_balance(self):
        spec = pareto_spec(1.5, p=0.7)
        z = sample_innovations(spec, 100_000, np.random.default_rng(17))
        x = float(np.quantile(np.abs(z), 0.99))
        p_hat, r_hat = tail_balance_estimate(z, x)
        assert p_hat == pytest.approx(0.7, abs=0.05)
        assert p_hat + r_hat == pytest.approx(1.0, abs=0.0)

    def test_no_exceedances(self):
        with pytest.raises(EstimationError):
            tail_balance_estimate([0.1, -0.2], 1.0)
