import itertools
import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from numpy.polynomial.hermite_e import hermegauss

from oulab.spectral import (heat_kernel_sq_bound, hermite_eigenfunction,
                            lowest_generator_eigenvalues, make_spectrum,
                            mode_trace_bound, mode_trace_exact, ou_transition)


class TestMakeSpectrum:
    def test_power_values(self):
        sp = make_spectrum("power", 4)
        assert np.array_equal(sp.alphas, [1.0, 4.0, 9.0, 16.0])

    def test_explicit_sorted(self):
        sp = make_spectrum("explicit", alphas=[3.0, 2.0, 2.0])
        assert np.array_equal(sp.alphas, [2.0, 2.0, 3.0])
        assert sp.tail_sum_bound == 0.0

    def test_power_tail_bound_value(self):
        # integral comparison: sum_{n>10} n^-2 <= int_10^inf t^-2 dt = 1/10
        sp = make_spectrum("power", 10)
        assert sp.tail_sum_bound == pytest.approx(0.1, abs=1e-15)

    @pytest.mark.parametrize("a,s", [(1.0, 2.0), (2.0, 3.0), (0.5, 1.5)])
    def test_tail_bound_dominates_true_tail(self, a, s):
        # oracle: partial sums of the true reciprocal tail, one million terms
        sp = make_spectrum("power", 10, a=a, s=s)
        n = np.arange(11, 1_000_001, dtype=float)
        partial = float(np.sum(1.0 / (a * n ** s)))
        assert partial <= sp.tail_sum_bound

    def test_rejects_bad_parameters(self):
        with pytest.raises(ValueError):
            make_spectrum("power", 10, s=1.0)
        with pytest.raises(ValueError):
            make_spectrum("power", 0)
        with pytest.raises(ValueError):
            make_spectrum("power", 4, a=-1.0)
        with pytest.raises(ValueError):
            make_spectrum("explicit", alphas=[1.0, -2.0])


class TestOUTransition:
    def test_time_zero_is_identity(self):
        x0 = np.array([0.3, -1.2, 5.0])
        out = ou_transition(3.7, 0.0, x0, np.array([9.0, 9.0, 9.0]))
        assert np.array_equal(out, x0)

    def test_closed_form_mean_and_variance(self):
        # alpha=1, t=ln 2: decay 1/2, conditional variance (1 - 1/4)/1 = 3/4
        t = math.log(2.0)
        assert ou_transition(1.0, t, 1.0, 0.0) == pytest.approx(0.5, abs=1e-15)
        spread = ou_transition(1.0, t, 0.0, 1.0)
        assert spread ** 2 == pytest.approx(0.75, abs=1e-15)

    def test_rejects_negative_time(self):
        with pytest.raises(ValueError):
            ou_transition(1.0, -0.1, 0.0, 0.0)
        with pytest.raises(ValueError):
            ou_transition(0.0, 1.0, 0.0, 0.0)

    def test_stationarity_monte_carlo(self, rng):
        # stationary input law N(0,1) stays N(0,1): sample variance within 4 SE
        n = 100_000
        x0 = rng.standard_normal(n)
        out = ou_transition(1.0, 0.37, x0, rng.standard_normal(n))
        var = np.var(out, ddof=1)
        se = var * math.sqrt(2.0 / (n - 1))
        assert abs(var - 1.0) <= 4.0 * se

    @settings(max_examples=200, deadline=None)
    @given(
        la=st.floats(-2.0, 3.0),
        lt1=st.floats(-3.0, 2.0),
        lt2=st.floats(-3.0, 2.0),
    )
    def test_chapman_kolmogorov_closed_forms(self, la, lt1, lt2):
        alpha, t1, t2 = 10.0 ** la, 10.0 ** lt1, 10.0 ** lt2
        decay = lambda t: math.exp(-alpha * t)
        var = lambda t: -math.expm1(-2.0 * alpha * t) / alpha
        assert decay(t1) * decay(t2) == pytest.approx(decay(t1 + t2), rel=1e-12)
        composed = var(t2) + decay(t2) ** 2 * var(t1)
        assert composed == pytest.approx(var(t1 + t2), rel=1e-12)

    def test_two_step_aggregation_identity(self, rng):
        # a fine-grid pair of transitions equals one coarse transition with the
        # aggregated noise; exactness means no discretization bias exists
        alpha, t1, t2 = 2.3, 0.4, 0.9
        x0 = rng.standard_normal(1000)
        z1 = rng.standard_normal(1000)
        z2 = rng.standard_normal(1000)
        two_step = ou_transition(alpha, t2, ou_transition(alpha, t1, x0, z1), z2)
        s = lambda t: math.sqrt(-math.expm1(-2.0 * alpha * t) / alpha)
        z_agg = (math.exp(-alpha * t2) * s(t1) * z1 + s(t2) * z2) / s(t1 + t2)
        one_step = ou_transition(alpha, t1 + t2, x0, z_agg)
        assert np.allclose(two_step, one_step, atol=1e-12)


class TestHermite:
    def test_degree_zero_is_one(self):
        x = np.linspace(-5, 5, 11)
        assert np.array_equal(hermite_eigenfunction(0, 2.0, x), np.ones(11))

    def test_degree_one_value(self):
        # normalized degree one is sqrt(alpha) * x
        assert hermite_eigenfunction(1, 4.0, 0.5) == pytest.approx(1.0, abs=1e-15)

    @pytest.mark.parametrize("alpha", [0.5, 1.0, 4.0])
    def test_orthonormality_quadrature_oracle(self, alpha):
        # Gauss-Hermite order 64 is exact for polynomial integrands of degree
        # <= 127; degrees k, l <= 6 are far inside that budget.
        nodes, weights = hermegauss(64)
        weights = weights / weights.sum()
        xs = nodes / math.sqrt(alpha)
        vals = np.stack([hermite_eigenfunction(k, alpha, xs) for k in range(7)])
        gram = (vals * weights) @ vals.T
        assert np.abs(gram - np.eye(7)).max() < 1e-10

    def test_semigroup_identity_monte_carlo(self, rng):
        alpha, t, x0, n = 1.0, 0.35, 0.8, 200_000
        xt = ou_transition(alpha, t, np.full(n, x0), rng.standard_normal(n))
        for k in range(1, 5):
            vals = hermite_eigenfunction(k, alpha, xt)
            target = math.exp(-k * alpha * t) * hermite_eigenfunction(k, alpha, x0)
            se = np.std(vals, ddof=1) / math.sqrt(n)
            assert abs(np.mean(vals) - target) <= 4.0 * se

    def test_rejects_bad_arguments(self):
        with pytest.raises(ValueError):
            hermite_eigenfunction(-1, 1.0, 0.0)
        with pytest.raises(ValueError):
            hermite_eigenfunction(2, 0.0, 0.0)


class TestTraceBounds:
    def test_closed_form_values(self):
        assert mode_trace_exact(1.0, 0.5) == pytest.approx(1.0 / (1.0 - math.exp(-1.0)), abs=1e-12)
        assert mode_trace_bound(1.0, 0.5) == pytest.approx(1.0 + 2.0 * math.exp(-1.0), abs=1e-12)

    def test_both_tend_to_one(self):
        assert mode_trace_exact(1.0, 20.0) == pytest.approx(1.0, abs=1e-8)
        assert mode_trace_bound(1.0, 20.0) == pytest.approx(1.0, abs=1e-8)

    def test_exact_below_bound_on_log_grid(self):
        for alpha in np.logspace(-2, 3, 40):
            for t in np.logspace(-3, 2, 40):
                assert mode_trace_exact(alpha, t) <= mode_trace_bound(alpha, t)

    def test_rejects_nonpositive_time(self):
        with pytest.raises(ValueError):
            mode_trace_exact(1.0, 0.0)
        with pytest.raises(ValueError):
            mode_trace_bound(1.0, -1.0)


class TestHeatKernelProduct:
    @pytest.mark.parametrize("t", [0.1, 1.0, 10.0])
    def test_log_product_matches_term_sum(self, t):
        # oracle: naive term-by-term accumulation of the same series
        sp = make_spectrum("power", 50)
        naive = 0.0
        for alpha in sp.alphas:
            x = 2.0 * alpha * t
            naive += math.log1p(2.0 * math.exp(-x) / min(x, 1.0))
        naive += sp.tail_sum_bound / t
        assert math.log(heat_kernel_sq_bound(sp, t)) == pytest.approx(naive, abs=1e-12)

    def test_explicit_spectrum_has_no_tail(self):
        sp = make_spectrum("explicit", alphas=[1.0, 4.0])
        expected = mode_trace_bound(1.0, 2.0) * mode_trace_bound(4.0, 2.0)
        assert heat_kernel_sq_bound(sp, 2.0) == pytest.approx(expected, rel=1e-12)

    def test_rejects_bad_time_and_thin_truncation(self):
        sp = make_spectrum("power", 50)
        with pytest.raises(ValueError):
            heat_kernel_sq_bound(sp, 0.0)
        thin = make_spectrum("power", 2)
        # next rate is 9; 2 * 9 * 0.01 < 1 so the certified tail constant fails
        with pytest.raises(ValueError, match="truncation"):
            heat_kernel_sq_bound(thin, 0.01)

    def test_eigenvalue_shadow_never_exceeds_product(self):
        sp = make_spectrum("power", 50)
        lam = lowest_generator_eigenvalues(sp, 200)
        for t in (0.1, 1.0, 10.0):
            shadow = float(np.sum(np.exp(-2.0 * lam * t)))
            assert shadow <= heat_kernel_sq_bound(sp, t)


class TestGeneratorEigenvalues:
    def test_matches_brute_force_enumeration(self):
        sp = make_spectrum("power", 3)  # rates 1, 4, 9
        # oracle: enumerate multi-indices with per-mode degree <= 12
        sums = sorted(
            k1 * 1.0 + k2 * 4.0 + k3 * 9.0
            for k1, k2, k3 in itertools.product(range(13), repeat=3)
        )
        got = lowest_generator_eigenvalues(sp, 30)
        assert np.allclose(got, sums[:30], atol=0.0)

    def test_starts_at_zero_and_is_sorted(self, spectrum8):
        lam = lowest_generator_eigenvalues(spectrum8, 50)
        assert lam[0] == 0.0
        assert np.all(np.diff(lam) >= 0.0)
