"""Verification suites: each runs one family of identity checks and returns
deterministic report rows.

The suites share a model context (spectrum, reference measure, mode basis,
sample sizes, seed) built from a run configuration.  Randomized inputs are
drawn from the seeded generator, so a (config, seed) pair fixes every row.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
from numpy.polynomial.hermite_e import hermegauss
from scipy.stats import ks_2samp

from . import calculus
from .calculus import (FUNCTION_CATALOG, CylindricalFunction, chain_rule_residual,
                       directional_derivative_fd, fd_step, gradient_dual_norms,
                       intrinsic_pairing, named_function)
from .forms import energy_bound_check, galerkin_eig_compare
from .lifted import (HermiteModeFunctional, anchored_positions,
                     sample_coefficients)
from .measures import (BaseMeasure, EigenBasis, TangentVector, eigenbasis_cosine,
                       gram_matrix, make_base_measure, pushforward, tangent_norm)
from .process import (ibp_check_many, reference_invariance_check,
                      sample_invariant, semigroup_eigen_check)
from .reporting import ReportRow
from .spectral import (Spectrum, heat_kernel_sq_bound, hermite_eigenfunction,
                       make_spectrum, mode_trace_bound, mode_trace_exact)
from .wasserstein import w1d

__all__ = ["ModelContext", "SUITES", "run_suite", "suite_names"]


@dataclass
class ModelContext:
    """Everything a suite needs: the spectral model, discretized reference,
    mode basis, Monte Carlo budget and seed, and the tolerances."""

    spectrum: Spectrum
    base: BaseMeasure
    basis: EigenBasis
    n_samples: int = 100_000
    seed: int = 0
    n_triples: int = 100
    n_pairs: int = 500
    n_monotone: int = 100
    fd_h: float = 1e-5
    tolerances: dict = field(default_factory=dict)
    ibp_names: tuple = ("mean", "second_moment", "tanh_mean")
    c1_names: tuple = ("mean", "tanh_mean", "atan_mean")

    def tol(self, name: str, default: float) -> float:
        return float(self.tolerances.get(name, default))

    @classmethod
    def default(cls, seed: int = 0, **kwargs) -> "ModelContext":
        spectrum = make_spectrum("power", 8)
        base = make_base_measure("uniform01", 200)
        basis = eigenbasis_cosine(base, 8)
        return cls(spectrum=spectrum, base=base, basis=basis, seed=seed, **kwargs)


def _smooth_field_values(rng: np.random.Generator, x: np.ndarray,
                         scale: float = 0.3) -> np.ndarray:
    """Random smooth field a + b x + c sin(pi x) + d cos(2 pi x) on the support."""
    a, b, c, d = scale * rng.standard_normal(4)
    return a + b * x + c * np.sin(np.pi * x) + d * np.cos(2.0 * np.pi * x)


_SMOOTH_NAMES = ("mean", "second_moment", "tanh_mean", "sin_second_moment",
                 "tanh_second_moment", "mean_squared", "atan_mean", "tanh_mixed")


def _random_function(rng: np.random.Generator) -> CylindricalFunction:
    return FUNCTION_CATALOG[_SMOOTH_NAMES[rng.integers(len(_SMOOTH_NAMES))]]


# ---------------------------------------------------------------------------


def suite_chain_rule(ctx: ModelContext) -> list[ReportRow]:
    """Chain rule through the push-forward and the analytic-vs-FD directional
    derivative, over randomized (function, field, direction) triples."""
    rng = np.random.default_rng(np.random.SeedSequence([ctx.seed, 101]))
    tol = ctx.tol("chain_rule", 1e-6)
    x = ctx.base.points1d
    worst_chain = 0.0
    worst_dir = 0.0
    for _ in range(ctx.n_triples):
        u = _random_function(rng)
        phi = TangentVector(values=x + _smooth_field_values(rng, x))
        xi = TangentVector(values=_smooth_field_values(rng, x))
        analytic = intrinsic_pairing(u, pushforward(ctx.base, phi), xi.values)
        h = fd_step(float(np.abs(phi.values).max()), ctx.fd_h)
        res = chain_rule_residual(u, ctx.base, phi, xi, h)
        worst_chain = max(worst_chain, res / (1.0 + abs(analytic)))

        mu = pushforward(ctx.base, phi)
        field = _smooth_field_values(rng, mu.points1d)
        fd = directional_derivative_fd(u, mu, field, h)
        exact = intrinsic_pairing(u, mu, field)
        worst_dir = max(worst_dir, abs(fd - exact) / (1.0 + abs(exact)))
    return [
        ReportRow("chain_rule.max_rel_residual", worst_chain, 0.0, tol,
                  worst_chain <= tol, ctx.seed),
        ReportRow("intrinsic_vs_fd.max_rel_error", worst_dir, 0.0, tol,
                  worst_dir <= tol, ctx.seed),
    ]


def suite_lipschitz(ctx: ModelContext) -> list[ReportRow]:
    """Push-forward contraction in W_p and its sharpness on monotone pairs."""
    rng = np.random.default_rng(np.random.SeedSequence([ctx.seed, 102]))
    contraction_tol = ctx.tol("contraction", 1e-12)
    equality_tol = ctx.tol("monotone_equality", 1e-10)
    x = ctx.base.points1d
    rows = []
    for p in (1.0, 2.0):
        worst = -math.inf
        for _ in range(ctx.n_pairs // 2):
            phi1 = TangentVector(values=x + _smooth_field_values(rng, x))
            phi2 = TangentVector(values=x + _smooth_field_values(rng, x))
            dist, _ = w1d(pushforward(ctx.base, phi1), pushforward(ctx.base, phi2), p)
            gap = dist - tangent_norm(ctx.base, TangentVector(values=phi1.values - phi2.values), p)
            worst = max(worst, gap)
        rows.append(ReportRow(f"contraction.max_gap[p={p:g}]", worst, 0.0,
                              contraction_tol, worst <= contraction_tol, ctx.seed))
    worst_eq = 0.0
    for _ in range(ctx.n_monotone):
        bumps1 = np.abs(rng.standard_normal(x.size)) + 0.05
        bumps2 = np.abs(rng.standard_normal(x.size)) + 0.05
        phi1 = TangentVector(values=np.cumsum(bumps1) / x.size)
        phi2 = TangentVector(values=np.cumsum(bumps2) / x.size)
        dist, _ = w1d(pushforward(ctx.base, phi1), pushforward(ctx.base, phi2), 2.0)
        norm = tangent_norm(ctx.base, TangentVector(values=phi1.values - phi2.values), 2.0)
        worst_eq = max(worst_eq, abs(dist - norm))
    rows.append(ReportRow("contraction.monotone_equality_gap", worst_eq, 0.0,
                          equality_tol, worst_eq <= equality_tol, ctx.seed))
    return rows


def suite_ibp(ctx: ModelContext) -> list[ReportRow]:
    """Integration by parts of the invariant Gaussian on a pair grid."""
    rows = []
    modes = (1, 2, 3)
    for nm_u in ctx.ibp_names:
        for nm_v in ctx.ibp_names:
            results = ibp_check_many(
                named_function(nm_u), named_function(nm_v), modes,
                ctx.spectrum, ctx.basis, ctx.n_samples, ctx.seed)
            for mode, (lhs, rhs, diff_se, holds) in zip(modes, results):
                rows.append(ReportRow(
                    f"ibp[{nm_u};{nm_v};mode{mode}]", abs(lhs.value - rhs.value),
                    diff_se, 4.0 * diff_se, holds, ctx.seed))
    return rows


def suite_semigroup(ctx: ModelContext) -> list[ReportRow]:
    """Eigenfunction decay of the mode semigroups."""
    rows = []
    x0 = 0.5
    for mode in (1, 2):
        for k in range(5):
            for t in (0.1, 0.5, 2.0):
                lhs, rhs, holds = semigroup_eigen_check(
                    ctx.spectrum, k, mode, t, x0, ctx.n_samples, ctx.seed)
                rows.append(ReportRow(
                    f"semigroup[k={k};mode{mode};t={t:g}]", abs(lhs.value - rhs),
                    lhs.std_error, 4.0 * lhs.std_error, holds, ctx.seed))
    return rows


def suite_orthonormality(ctx: ModelContext) -> list[ReportRow]:
    """Hermite orthonormality under the mode Gaussians (Gauss-Hermite order 64,
    exact for the polynomial integrands involved) and the basis Gram defect."""
    nodes, weights = hermegauss(64)
    weights = weights / weights.sum()
    tol = ctx.tol("orthonormality", 1e-10)
    worst = 0.0
    for alpha in (float(ctx.spectrum.alphas[0]), float(ctx.spectrum.alphas[-1])):
        xs = nodes / math.sqrt(alpha)
        vals = np.stack([hermite_eigenfunction(k, alpha, xs) for k in range(7)])
        gram = (vals * weights) @ vals.T
        worst = max(worst, float(np.abs(gram - np.eye(7)).max()))
    rows = [ReportRow("hermite.orthonormality_defect", worst, 0.0, tol,
                      worst <= tol, ctx.seed)]
    defect = float(np.abs(gram_matrix(ctx.basis) - np.eye(ctx.basis.n_modes)).max())
    gram_tol = ctx.tol("gram", 1e-9)
    rows.append(ReportRow("basis.gram_defect", defect, 0.0, gram_tol,
                          defect <= gram_tol, ctx.seed))
    return rows


def suite_c1(ctx: ModelContext) -> list[ReportRow]:
    """Sampled dual gradient norms against declared uniform bounds, and the
    energy-versus-bound inequality."""
    measures = sample_invariant(ctx.spectrum, ctx.basis, 64, ctx.seed + 103)
    rows = []
    for name in ctx.c1_names:
        f = named_function(name)
        est, bound = gradient_dual_norms(f, measures, p=2.0)
        rows.append(ReportRow(f"c1.dual_norm[{name}]", est, 0.0, bound,
                              est <= bound, ctx.seed))
    for name in ctx.c1_names[:2]:
        energy, bound, holds = energy_bound_check(
            named_function(name), ctx.spectrum, ctx.basis, C=1.0,
            n_samples=ctx.n_samples, seed=ctx.seed)
        rows.append(ReportRow(f"c1.energy[{name}]", energy.value,
                              energy.std_error, bound, holds, ctx.seed))
    return rows


def galerkin_dictionaries(ctx: ModelContext):
    """Canonical 6-in-9 pair: six pulled-back cylindrical functions inside a
    dictionary extended by three exact mode eigenfunctions.

    The extras avoid degree-2 Hermite functions of the first mode: the mean
    functional is exactly affine in c_1, so those would make the dictionary
    linearly dependent together with mean_squared.
    """
    sub = [FUNCTION_CATALOG[n] for n in
           ("mean", "second_moment", "tanh_mean", "sin_second_moment",
            "mean_squared", "atan_mean")]
    extras = [HermiteModeFunctional(mode=1, degree=1, spectrum=ctx.spectrum, basis=ctx.basis),
              HermiteModeFunctional(mode=2, degree=1, spectrum=ctx.spectrum, basis=ctx.basis),
              HermiteModeFunctional(mode=2, degree=2, spectrum=ctx.spectrum, basis=ctx.basis)]
    return sub + extras, sub


def suite_galerkin(ctx: ModelContext) -> list[ReportRow]:
    """Rayleigh-Ritz eigenvalue sandwich on shared samples."""
    big, sub = galerkin_dictionaries(ctx)
    comp = galerkin_eig_compare(big, sub, ctx.spectrum, ctx.basis,
                                ctx.n_samples, ctx.seed)
    rows = []
    for n, (lo, hi) in enumerate(zip(comp.big_values, comp.sub_values), start=1):
        gap = float(hi - lo)
        rows.append(ReportRow(f"galerkin.level{n}", gap, 0.0, comp.slack,
                              gap >= -comp.slack, ctx.seed))
    return rows


def suite_invariance(ctx: ModelContext) -> list[ReportRow]:
    """Reference-point invariance of the induced Gaussian law, plus time
    invariance of stationary functional laws."""
    base_a = ctx.base
    doubled = TangentVector(values=2.0 * base_a.points1d)
    base_b = pushforward(base_a, doubled)
    tests = [calculus.TEST_FUNCTIONS[n] for n in ("coord", "square", "atan")]
    n_draws = min(ctx.n_samples, 10_000)
    report = reference_invariance_check(
        base_a, base_b, lambda x: 2.0 * x, lambda y: 0.5 * y,
        ctx.spectrum, ctx.basis.n_modes, tests, n_draws, ctx.seed)
    rows = []
    for name, stat, pval in zip(report.names, report.statistics, report.p_values):
        rows.append(ReportRow(f"invariance.ks_pvalue[{name}]", float(pval), 0.0,
                              report.level, pval >= report.level, ctx.seed))

    # Stationarity in time: the law of mu(psi) at t = 0 matches t = T, on
    # independent ensembles so the two-sample test sees independent data.
    rng = np.random.default_rng(np.random.SeedSequence([ctx.seed, 104]))
    c0 = sample_coefficients(ctx.spectrum, rng, n_draws)
    c0_other = sample_coefficients(ctx.spectrum, rng, n_draws)
    z = rng.standard_normal(c0_other.shape)
    big_t = 1.5
    decay = np.exp(-ctx.spectrum.alphas * big_t)
    spread = np.sqrt(-np.expm1(-2.0 * ctx.spectrum.alphas * big_t) / ctx.spectrum.alphas)
    ct = decay * c0_other + spread * z
    pos0 = anchored_positions(ctx.basis, c0)
    post = anchored_positions(ctx.basis, ct)
    w = ctx.base.weights
    level = ctx.tol("ks_level", 0.01) / len(tests)
    for psi in tests:
        f0 = psi.fn(pos0.reshape(-1, 1)).reshape(pos0.shape) @ w
        ft = psi.fn(post.reshape(-1, 1)).reshape(post.shape) @ w
        res = ks_2samp(f0, ft)
        rows.append(ReportRow(f"stationarity.ks_pvalue[{psi.name}]",
                              float(res.pvalue), 0.0, level,
                              res.pvalue >= level, ctx.seed))
    return rows


def heat_bound_rows(spectrum: Spectrum, times, seed: int) -> list[ReportRow]:
    """Per-mode exact trace <= bound rows and the spectral product bound."""
    rows = []
    for t in times:
        for n, alpha in enumerate(spectrum.alphas, start=1):
            exact = mode_trace_exact(float(alpha), t)
            bound = mode_trace_bound(float(alpha), t)
            rows.append(ReportRow(f"heat[t={t:g}].mode{n}.exact", exact, 0.0,
                                  bound, exact <= bound, seed))
            rows.append(ReportRow(f"heat[t={t:g}].mode{n}.bound", bound, 0.0,
                                  bound, exact <= bound, seed))
        product = heat_kernel_sq_bound(spectrum, t)
        rows.append(ReportRow(f"heat[t={t:g}].product_bound", product, 0.0,
                              product, True, seed))
    return rows


SUITES = {
    "chain-rule": suite_chain_rule,
    "lipschitz": suite_lipschitz,
    "ibp": suite_ibp,
    "semigroup": suite_semigroup,
    "orthonormality": suite_orthonormality,
    "c1": suite_c1,
    "galerkin": suite_galerkin,
    "invariance": suite_invariance,
}


def suite_names() -> list[str]:
    return list(SUITES) + ["all"]


def run_suite(name: str, ctx: ModelContext) -> list[ReportRow]:
    if name == "all":
        rows = []
        for fn in SUITES.values():
            rows.extend(fn(ctx))
        return rows
    try:
        fn = SUITES[name]
    except KeyError:
        raise ValueError(f"unknown suite {name!r}; choose from {', '.join(suite_names())}") from None
    return fn(ctx)
