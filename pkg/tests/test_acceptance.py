"""Acceptance criteria, one test per criterion at its stated tolerance.

Each test prints a single ``ACCEPTANCE n <name>: PASS/FAIL`` line (visible
with ``pytest -s tests/test_acceptance.py``) and enforces its runtime
budget.  Monte Carlo criteria run on fixed seeds so the whole gate is
deterministic.
"""

import itertools
import math
import time
from contextlib import contextmanager

import numpy as np
import pytest

from oulab import (CoefficientFunctional, ConstantFunctional, DiscreteMeasure,
                   TangentVector, eigenbasis_cosine, galerkin_eig_compare,
                   heat_kernel_sq_bound, ibp_check,
                   ibp_check_many, lowest_generator_eigenvalues, make_base_measure,
                   make_spectrum, mode_trace_bound, mode_trace_exact,
                   pushforward, reference_invariance_check,
                   semigroup_eigen_check, tangent_norm, w1d, w_exact,
                   w_sinkhorn)
from oulab.calculus import (FUNCTION_CATALOG, TEST_FUNCTIONS, c1_clamp,
                            chain_rule_residual, clamped_tail_mass,
                            directional_derivative_fd, fd_step,
                            intrinsic_pairing)
from oulab.suites import ModelContext, galerkin_dictionaries

SEED = 20240817


@contextmanager
def criterion(number, name, budget_seconds):
    start = time.perf_counter()
    try:
        yield
    except BaseException:
        print(f"ACCEPTANCE {number} {name}: FAIL")
        raise
    elapsed = time.perf_counter() - start
    print(f"ACCEPTANCE {number} {name}: PASS ({elapsed:.2f}s)")
    assert elapsed < budget_seconds, f"runtime budget exceeded: {elapsed:.2f}s"


@pytest.fixture(scope="module")
def ctx():
    return ModelContext.default(seed=SEED)


def test_criterion_01_heat_kernel_bound():
    with criterion(1, "heat-kernel bound", 1.0):
        for alpha in np.logspace(-2, 3, 40):
            for t in np.logspace(-3, 2, 40):
                assert mode_trace_exact(alpha, t) <= mode_trace_bound(alpha, t)
        assert mode_trace_exact(1.0, 0.5) == pytest.approx(1.581977, abs=1e-6)
        assert mode_trace_bound(1.0, 0.5) == pytest.approx(1.735759, abs=1e-6)


def test_criterion_02_spectral_product():
    with criterion(2, "spectral product", 1.0):
        sp = make_spectrum("power", 50)
        lam = lowest_generator_eigenvalues(sp, 400)
        for t in (0.1, 1.0, 10.0):
            term_sum = 0.0
            for alpha in sp.alphas:
                x = 2.0 * alpha * t
                term_sum += math.log1p(2.0 * math.exp(-x) / min(x, 1.0))
            term_sum += sp.tail_sum_bound / t
            bound = heat_kernel_sq_bound(sp, t)
            assert math.log(bound) == pytest.approx(term_sum, abs=1e-12)
            shadow = float(np.sum(np.exp(-2.0 * lam * t)))
            assert shadow <= bound


def test_criterion_03_pushforward_contraction():
    with criterion(3, "pushforward contraction", 5.0):
        rng = np.random.default_rng(SEED)
        base = make_base_measure("uniform01", 200)
        basis = eigenbasis_cosine(base, 8)
        sp = make_spectrum("power", 8)
        x = base.points1d
        for p in (1.0, 2.0):
            for _ in range(250):
                c1 = rng.standard_normal(8) / np.sqrt(sp.alphas)
                c2 = rng.standard_normal(8) / np.sqrt(sp.alphas)
                f1 = TangentVector(values=x + c1 @ basis.values)
                f2 = TangentVector(values=x + c2 @ basis.values)
                dist, _ = w1d(pushforward(base, f1), pushforward(base, f2), p)
                gap = TangentVector(values=f1.values - f2.values)
                assert dist <= tangent_norm(base, gap, p) + 1e-12
        for _ in range(100):
            f1 = TangentVector(values=np.cumsum(np.abs(rng.standard_normal(200)) + 0.01) / 200.0)
            f2 = TangentVector(values=np.cumsum(np.abs(rng.standard_normal(200)) + 0.01) / 200.0)
            dist, _ = w1d(pushforward(base, f1), pushforward(base, f2), 2.0)
            gap = TangentVector(values=f1.values - f2.values)
            assert dist == pytest.approx(tangent_norm(base, gap, 2.0), abs=1e-10)


_SMOOTH = ("mean", "second_moment", "tanh_mean", "sin_second_moment",
           "tanh_second_moment", "mean_squared", "atan_mean", "tanh_mixed")


def test_criterion_04_chain_rule():
    with criterion(4, "chain rule", 5.0):
        rng = np.random.default_rng(SEED + 4)
        base = make_base_measure("uniform01", 200)
        x = base.points1d
        for _ in range(100):
            u = FUNCTION_CATALOG[_SMOOTH[rng.integers(len(_SMOOTH))]]
            phi = TangentVector(values=x + 0.3 * rng.standard_normal(200))
            xi = TangentVector(values=0.5 * rng.standard_normal(200))
            analytic = intrinsic_pairing(u, pushforward(base, phi), xi.values)
            res = chain_rule_residual(u, base, phi, xi, fd_step(1.0))
            assert res <= 1e-6 * (1.0 + abs(analytic))


def test_criterion_05_intrinsic_derivative():
    with criterion(5, "intrinsic derivative vs finite differences", 5.0):
        rng = np.random.default_rng(SEED + 5)
        base = make_base_measure("uniform01", 200)
        x = base.points1d
        for _ in range(100):
            u = FUNCTION_CATALOG[_SMOOTH[rng.integers(len(_SMOOTH))]]
            mu = pushforward(base, TangentVector(values=x + 0.3 * rng.standard_normal(200)))
            field = 0.5 * rng.standard_normal(200)
            fd = directional_derivative_fd(u, mu, field, fd_step(1.0))
            exact = intrinsic_pairing(u, mu, field)
            assert abs(fd - exact) <= 1e-6 * (1.0 + abs(exact))


def test_criterion_06_integration_by_parts(ctx):
    with criterion(6, "integration by parts", 60.0):
        linear_u = CoefficientFunctional(1, ctx.basis)
        one = ConstantFunctional(1.0, ctx.basis)
        lhs, rhs, _, holds = ibp_check(linear_u, one, 1, ctx.spectrum, ctx.basis,
                                       100_000, SEED)
        assert lhs.value == 1.0
        assert abs(rhs.value - 1.0) <= 4.0 * rhs.std_error
        assert holds
        names = ("mean", "second_moment", "tanh_mean")
        for nm_u, nm_v in itertools.product(names, names):
            results = ibp_check_many(
                FUNCTION_CATALOG[nm_u], FUNCTION_CATALOG[nm_v], (1, 2, 3),
                ctx.spectrum, ctx.basis, 100_000, SEED)
            for mode, (_, _, _, holds) in zip((1, 2, 3), results):
                assert holds, (nm_u, nm_v, mode)


def test_criterion_07_semigroup_eigen_decay(ctx):
    with criterion(7, "semigroup eigenfunction decay", 60.0):
        for mode in (1, 2):
            for k in range(5):
                for t in (0.1, 0.5, 2.0):
                    lhs, rhs, holds = semigroup_eigen_check(
                        ctx.spectrum, k, mode, t, 0.5, 100_000, SEED)
                    assert holds, (k, mode, t, lhs.value, rhs)


def test_criterion_08_courant_fischer_comparison(ctx):
    with criterion(8, "eigenvalue comparison", 60.0):
        big, sub = galerkin_dictionaries(ctx)
        assert len(big) == 9 and len(sub) == 6
        comp = galerkin_eig_compare(big, sub, ctx.spectrum, ctx.basis,
                                    100_000, SEED)
        assert comp.holds
        assert np.all(comp.sub_values >= comp.big_values[:6] - comp.slack)


def test_criterion_09_reference_invariance(ctx):
    with criterion(9, "reference-point invariance", 30.0):
        doubled = pushforward(ctx.base, TangentVector(values=2.0 * ctx.base.points1d))
        tests = [TEST_FUNCTIONS[n] for n in ("coord", "square", "atan")]
        report = reference_invariance_check(
            ctx.base, doubled, lambda x: 2.0 * x, lambda y: 0.5 * y,
            ctx.spectrum, 8, tests, 10_000, SEED)
        assert report.holds
        assert report.level == pytest.approx(0.01 / 3.0)


def test_criterion_10_reference_functions():
    with criterion(10, "reference functions", 5.0):
        rng = np.random.default_rng(SEED + 10)
        for level in (1.0, 2.0):
            grid = np.linspace(-level, level, 101)
            assert np.array_equal(c1_clamp(grid, level), grid)
            h = 1e-6
            noise = 4.0 * np.finfo(float).eps * level / h
            s = np.linspace(-3.0 * level, 3.0 * level, 10_000)
            fd = (c1_clamp(s + h, level) - c1_clamp(s - h, level)) / (2.0 * h)
            assert np.all(fd >= (np.abs(s) <= level - h) - noise)
            assert np.all(fd <= (np.abs(s) <= 2.0 * level + h) + noise)
        for _ in range(50):
            n = int(rng.integers(1, 40))
            w = rng.random(n) + 0.05
            mu = DiscreteMeasure(points=4.0 * rng.standard_normal((n, 1)),
                                 weights=w / w.sum())
            radius = float(np.abs(mu.points).max())
            values = [clamped_tail_mass(mu, k) for k in range(int(radius) + 3)]
            assert all(b <= a + 1e-12 for a, b in zip(values, values[1:]))
            assert clamped_tail_mass(mu, math.ceil(radius)) == 0.0


def test_criterion_11_solver_cross_validation():
    with criterion(11, "solver cross-validation", 60.0):
        rng = np.random.default_rng(SEED + 11)

        def random_measure(n, weighted):
            pts = rng.standard_normal((n, 1))
            w = rng.random(n) + 0.05 if weighted else np.ones(n)
            return DiscreteMeasure(points=pts, weights=w / w.sum())

        for i in range(200):
            n = int(rng.integers(2, 33))
            m = n if i % 2 == 0 else int(rng.integers(2, 33))
            weighted = i % 3 != 0
            mu = random_measure(n, weighted)
            nu = random_measure(m, weighted)
            p = 1.0 if i % 2 == 0 else 2.0
            d_lp, _ = w_exact(mu, nu, p)
            d_q, _ = w1d(mu, nu, p)
            assert abs(d_lp - d_q) <= 1e-10
        for i in range(50):
            mu = random_measure(32, True)
            nu = random_measure(32, True)
            pts = np.concatenate([mu.points1d, nu.points1d])
            diam = float(pts.max() - pts.min())
            p = 1.0 if i % 2 == 0 else 2.0
            res = w_sinkhorn(mu, nu, p=p, epsilon=1e-4 * diam ** p,
                             marginal_tol=1e-7)
            exact, _ = w1d(mu, nu, p)
            assert res.converged
            assert abs(res.distance - exact) <= 1e-2 * diam
