import numpy as np
import pytest
import sympy

from mafclt.coefficients import DeterministicCoeffs, GeometricCoeffs, draw_coefficients
from mafclt.errors import DomainError
from mafclt.ma_paths import (
    InnovationWindow,
    StepPath,
    build_ma_series,
    lemma1_decomposition,
    partial_sum_path,
    truncated_ma_series,
)
from mafclt.tails import SlowVariation, TailSpec, normalizer_a, sample_innovations


def window_for(z_values, first_index):
    return InnovationWindow(first_index=first_index, z=np.asarray(z_values, dtype=float))


class TestStepPath:
    def test_cadlag_evaluation(self):
        p = StepPath(2, np.array([0.0, 1.0, 3.0]))
        assert p(0.0) == 0.0
        assert p(0.49) == 0.0
        assert p(0.5) == 1.0
        assert p(1.0) == 3.0

    def test_length_validation(self):
        with pytest.raises(DomainError):
            StepPath(3, np.array([0.0, 1.0]))

    def test_refined_same_function(self):
        p = StepPath(2, np.array([0.0, 1.0, 3.0]))
        r = p.refined(3)
        for t in np.linspace(0.0, 1.0, 101):
            assert r(t) == p(t)

    def test_csv_round_trip(self, tmp_path):
        p = StepPath(4, np.array([0.0, 0.25, -1.0, 3.5, 3.5]))
        f = tmp_path / "path.csv"
        p.to_csv(f)
        q = StepPath.from_csv(f)
        assert q.n == p.n
        assert np.array_equal(q.values, p.values)


class TestBuildSeries:
    def test_identity_filter(self):
        draw = draw_coefficients(DeterministicCoeffs((1.0,)), 0, np.random.default_rng(0))
        w = window_for([5.0, -1.0, 2.0], first_index=1)
        assert np.array_equal(build_ma_series(draw, w, 3), [5.0, -1.0, 2.0])

    def test_two_tap_filter(self):
        draw = draw_coefficients(DeterministicCoeffs((1.0, 1.0)), 1, np.random.default_rng(0))
        w = window_for([1.0, 2.0, 3.0], first_index=0)
        assert np.array_equal(build_ma_series(draw, w, 2), [3.0, 5.0])

    def test_window_too_short(self):
        draw = draw_coefficients(DeterministicCoeffs((1.0, 1.0)), 1, np.random.default_rng(0))
        with pytest.raises(DomainError):
            build_ma_series(draw, window_for([1.0, 2.0], first_index=1), 2)

    def test_doubling_horizon_moves_each_term_within_tail_bound(self):
        model = GeometricCoeffs(rho=0.6)
        rng = np.random.default_rng(3)
        spec = TailSpec(alpha=1.5, sv=SlowVariation.constant(), x_min=1.0)
        k1, k2 = 12, 24
        z = sample_innovations(spec, 200 + k2, rng)
        w = InnovationWindow(first_index=1 - k2, z=z)
        d1 = draw_coefficients(model, k1, rng)
        d2 = draw_coefficients(model, k2, rng)
        x1 = build_ma_series(d1, w, 200)
        x2 = build_ma_series(d2, w, 200)
        bound = d1.tail_bound * np.max(np.abs(z))
        assert np.max(np.abs(x1 - x2)) <= bound + 1e-12


class TestTruncatedSeries:
    def test_q_one_formula(self):
        draw = draw_coefficients(DeterministicCoeffs((1.0, 0.5)), 1, np.random.default_rng(0))
        w = window_for([2.0, 4.0, 8.0], first_index=0)
        out = truncated_ma_series(draw, 1, w, 2)
        assert np.allclose(out, [4.0 + 0.5 * 2.0, 8.0 + 0.5 * 4.0])

    def test_q_equal_horizon_matches_full_series_when_tail_zero(self):
        draw = draw_coefficients(DeterministicCoeffs((1.0, 0.5, 0.25)), 2, np.random.default_rng(0))
        w = window_for(np.random.default_rng(1).normal(size=12), first_index=-1)
        assert np.allclose(
            truncated_ma_series(draw, 2, w, 10), build_ma_series(draw, w, 10), rtol=0, atol=1e-15
        )

    def test_weight_conservation(self):
        rng = np.random.default_rng(2)
        draw = draw_coefficients(GeometricCoeffs(rho=0.5), 8, rng)
        for q in range(9):
            c_prime = draw.total - sum(draw.values[:q])
            kernel_sum = sum(draw.values[:q]) + c_prime
            assert kernel_sum == pytest.approx(draw.total, rel=1e-14)

    def test_q_zero_collapses_to_scaled_innovations(self):
        draw = draw_coefficients(DeterministicCoeffs((1.0, 0.5, 0.25)), 2, np.random.default_rng(0))
        w = window_for([3.0, 1.0, -2.0], first_index=1)
        assert np.allclose(truncated_ma_series(draw, 0, w, 3), 1.75 * np.array([3.0, 1.0, -2.0]))


class TestPartialSumPath:
    def test_all_zero(self):
        p = partial_sum_path(np.zeros(5), 2.0)
        assert np.array_equal(p.values, np.zeros(6))

    def test_ones(self):
        p = partial_sum_path(np.ones(3), 1.0)
        assert np.array_equal(p.values, [0.0, 1.0, 2.0, 3.0])

    def test_endpoint_identity(self):
        rng = np.random.default_rng(0)
        series = rng.normal(size=100)
        p = partial_sum_path(series, 3.0)
        assert p.values[-1] == pytest.approx(series.sum() / 3.0, rel=1e-12)

    def test_linearity(self):
        rng = np.random.default_rng(1)
        series = rng.normal(size=50)
        p1 = partial_sum_path(3.0 * series, 1.0)
        p2 = partial_sum_path(series, 1.0)
        assert np.allclose(p1.values, 3.0 * p2.values, rtol=1e-12, atol=1e-12)

    def test_identity_coefficients_give_equal_paths(self):
        rng = np.random.default_rng(5)
        spec = TailSpec(alpha=1.0)
        z = sample_innovations(spec, 64, rng)
        w = InnovationWindow(first_index=1, z=z)
        draw = draw_coefficients(DeterministicCoeffs((1.0,)), 0, rng)
        x = build_ma_series(draw, w, 64)
        a = normalizer_a(spec, 64)
        assert np.array_equal(partial_sum_path(x, a).values, partial_sum_path(z, a).values)

    def test_rejects_bad_a_n(self):
        with pytest.raises(DomainError):
            partial_sum_path([1.0], 0.0)


def _symbolic_case(case, k, q):
    """Verify the displayed decomposition symbolically for one (case, k, q)."""
    n = k + q + 1
    z = {i: sympy.Symbol(f"z_{i}") for i in range(1 - q, n + 1)}
    c = [sympy.Symbol(f"c_{j}") for j in range(q + 1)]
    ctot = sum(c)

    def x(i):
        return sum(c[j] * z[i - j] for j in range(q + 1))

    upto = k + q if case == "iii" else k
    lhs = sum(ctot * z[i] for i in range(1, k + 1)) - sum(x(i) for i in range(1, upto + 1))
    g = sum(z[-u] * sum(c[s] for s in range(u + 1, q + 1)) for u in range(0, q))
    if case == "i":
        rhs = (
            sum(z[k - u] * sum(c[s] for s in range(u + 1, q + 1)) for u in range(0, k))
            - sum(z[-u] * sum(c[s] for s in range(u + 1, q + 1)) for u in range(q - k, q))
            - sum(z[-u] * sum(c[s] for s in range(u + 1, u + k + 1)) for u in range(0, q - k))
        )
    elif case == "ii":
        h = sum(z[k - u] * sum(c[s] for s in range(u + 1, q + 1)) for u in range(0, q))
        rhs = h - g
    else:
        t = sum(z[k + u] * sum(c[s] for s in range(0, q - u + 1)) for u in range(1, q + 1))
        rhs = -g - t
    return sympy.simplify(lhs - rhs)


class TestLemmaDecomposition:
    def test_symbolic_expansion_small_orders(self):
        for q in (1, 2, 3):
            for k in range(1, q):
                assert _symbolic_case("i", k, q) == 0
            for k in (q, q + 1, q + 2):
                assert _symbolic_case("ii", k, q) == 0
                assert _symbolic_case("iii", k, q) == 0

    def test_all_zero_coefficients(self):
        w = window_for(np.arange(-3.0, 12.0), first_index=-3)
        out = lemma1_decomposition(2, 3, 8, [0.0] * 4, w, case="i")
        assert out.lhs == out.rhs == 0.0

    def test_named_terms_hand_expanded(self):
        # q = 1, k = 1, C = (1, 1): H = z1 * c1 / a, G = z0 * c1 / a
        w = window_for([7.0, 2.0], first_index=0)
        out = lemma1_decomposition(1, 1, 4, [1.0, 1.0], w, a_n=2.0, case="ii")
        assert out.h == pytest.approx(2.0 / 2.0)
        assert out.g == pytest.approx(7.0 / 2.0)
        assert out.lhs == pytest.approx(out.rhs)
        # q = 2, k = 2, C = (1, 1, 1): H = (z2*(c1+c2) + z1*c2)/a, G = (z0*(c1+c2) + z_{-1}*c2)/a
        w2 = window_for([3.0, 5.0, 1.0, -4.0], first_index=-1)
        out2 = lemma1_decomposition(2, 2, 6, [1.0, 1.0, 1.0], w2, case="ii")
        assert out2.h == pytest.approx(-4.0 * 2.0 + 1.0)
        assert out2.g == pytest.approx(5.0 * 2.0 + 3.0)

    def test_case_constraints(self):
        w = window_for(np.zeros(30), first_index=-9)
        with pytest.raises(DomainError):
            lemma1_decomposition(5, 3, 20, [1.0] * 4, w, case="i")
        with pytest.raises(DomainError):
            lemma1_decomposition(2, 3, 20, [1.0] * 4, w, case="ii")
        with pytest.raises(DomainError):
            lemma1_decomposition(19, 3, 20, [1.0] * 4, w, case="iii")

    @pytest.mark.parametrize("case", ["i", "ii", "iii"])
    def test_residual_random_configs(self, case):
        rng = np.random.default_rng(42)
        for trial in range(200):
            alpha = [0.6, 1.0, 1.5][trial % 3]
            spec = TailSpec(alpha=alpha)
            q = int(rng.integers(2, 21))
            n = int(rng.integers(2 * q + 1, 501))
            if case == "i":
                k = int(rng.integers(1, q))
            elif case == "ii":
                k = int(rng.integers(q, n + 1))
            else:
                k = int(rng.integers(q, n - q + 1))
            coeffs = rng.normal(size=q + 1) * (10.0 ** rng.integers(-2, 3))
            z = sample_innovations(spec, n + 2 * q, rng)
            w = InnovationWindow(first_index=1 - q, z=z)
            a_n = normalizer_a(spec, n)
            out = lemma1_decomposition(k, q, n, coeffs, w, a_n=a_n, case=case)
            assert out.residual <= 1e-9 * (1.0 + abs(out.lhs))
