"""Exact simulation of the measure-valued OU process and its identity checks.

Each mode coefficient evolves by the exact scalar OU transition, so there is
no time-discretization bias: statistics at time t depend on t only.  The
state field is anchored at the identity map (coefficients zero push the
reference measure to itself) and snapshots of the moving measure are the
push-forwards of the anchored field.  The checks below verify, by Monte
Carlo with common random numbers, the semigroup action on Hermite
eigenfunctions, the martingale/semigroup residual, the integration by parts
formula of the invariant Gaussian, and invariance of the induced law under a
change of reference measure.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy.stats import ks_2samp

from .forms import MCEstimate, batched_estimate
from .lifted import (BATCH_SIZE, anchored_positions, lift, pushed_measure,
                     sample_coefficients)
from .measures import BaseMeasure, DiscreteMeasure, EigenBasis, eigenbasis_cosine
from .spectral import Spectrum, hermite_eigenfunction, ou_transition

__all__ = [
    "OUPathSample",
    "simulate_path",
    "sample_invariant",
    "semigroup_eigen_check",
    "generator_residual",
    "ibp_check",
    "ibp_check_many",
    "reference_invariance_check",
    "InvarianceReport",
]


@dataclass(frozen=True)
class OUPathSample:
    """One path of the mode coefficients on a strictly increasing time grid.

    ``states[k]`` is the coefficient vector at ``t_grid[k]``; measure
    snapshots are materialized on demand via :meth:`pushed`.
    """

    t_grid: np.ndarray
    states: np.ndarray
    seed: int
    basis: EigenBasis

    def __post_init__(self) -> None:
        t = np.asarray(self.t_grid, dtype=float).copy()
        s = np.asarray(self.states, dtype=float).copy()
        t.setflags(write=False)
        s.setflags(write=False)
        object.__setattr__(self, "t_grid", t)
        object.__setattr__(self, "states", s)

    def pushed(self, k: int) -> DiscreteMeasure:
        """Measure snapshot at grid index k (computed lazily)."""
        return pushed_measure(self.basis, self.states[k])


def simulate_path(spectrum: Spectrum, basis: EigenBasis, t_grid, init, seed: int,
                  ) -> OUPathSample:
    """Simulate one path by exact per-mode transitions over the grid increments.

    ``init`` is either the string "stationary" (coefficients drawn from the
    invariant Gaussian) or an explicit coefficient vector for time t_grid[0].
    Deterministic for a given seed.
    """
    t = np.asarray(t_grid, dtype=float)
    if t.ndim != 1 or t.size == 0:
        raise ValueError("need a nonempty time grid")
    if t[0] < 0.0 or np.any(np.diff(t) <= 0.0):
        raise ValueError("time grid must be strictly increasing and start at t >= 0")
    if spectrum.n_modes != basis.n_modes:
        raise ValueError("spectrum and basis must agree on the mode count")
    rng = np.random.default_rng(seed)
    if isinstance(init, str):
        if init != "stationary":
            raise ValueError(f"unknown init {init!r}")
        state = sample_coefficients(spectrum, rng, 1)[0]
    else:
        state = np.asarray(init, dtype=float)
        if state.shape != (spectrum.n_modes,):
            raise ValueError("initial coefficients must have one entry per mode")
    states = np.empty((t.size, spectrum.n_modes))
    states[0] = state
    for k in range(1, t.size):
        dt = float(t[k] - t[k - 1])
        z = rng.standard_normal(spectrum.n_modes)
        for n, alpha in enumerate(spectrum.alphas):
            states[k, n] = ou_transition(float(alpha), dt, states[k - 1, n], z[n])
    return OUPathSample(t_grid=t, states=states, seed=seed, basis=basis)


def sample_invariant(spectrum: Spectrum, basis: EigenBasis, n: int, seed: int,
                     ) -> list[DiscreteMeasure]:
    """n independent draws of the invariant measure-valued state: push-forwards
    of the anchored Gaussian field."""
    if n < 1:
        raise ValueError("need at least one draw")
    rng = np.random.default_rng(seed)
    coeffs = sample_coefficients(spectrum, rng, n)
    return [pushed_measure(basis, c) for c in coeffs]


def semigroup_eigen_check(spectrum: Spectrum, k: int, mode: int, t: float,
                          x0: float, n_samples: int, seed: int,
                          ) -> tuple[MCEstimate, float, bool]:
    """Hermite eigenfunction decay of one mode.

    The Monte Carlo mean of the k-th eigenfunction at time t, started from
    x0, must match exp(-k alpha t) times its initial value within 4 sigma.
    """
    if not 1 <= mode <= spectrum.n_modes:
        raise ValueError("mode index out of range")
    if t <= 0.0:
        raise ValueError("need t > 0")
    alpha = float(spectrum.alphas[mode - 1])
    rng = np.random.default_rng(seed)
    sums: list[float] = []
    sq_sums: list[float] = []
    done = 0
    while done < n_samples:
        take = min(BATCH_SIZE, n_samples - done)
        z = rng.standard_normal(take)
        xt = ou_transition(alpha, t, np.full(take, x0), z)
        vals = hermite_eigenfunction(k, alpha, xt)
        sums.append(float(np.sum(vals)))
        sq_sums.append(float(np.sum(vals * vals)))
        done += take
    lhs = batched_estimate(sums, sq_sums, n_samples, seed)
    rhs = math.exp(-k * alpha * t) * float(hermite_eigenfunction(k, alpha, x0))
    holds = (abs(lhs.value - rhs) <= 4.0 * lhs.std_error
             or (lhs.std_error == 0.0 and lhs.value == rhs))
    return lhs, rhs, bool(holds)


def generator_residual(spectrum: Spectrum, k: int, mode: int, t: float,
                       n_samples: int, seed: int, init="stationary",
                       ) -> MCEstimate:
    """Semigroup residual of the degree-k Hermite observable of one mode.

    Per path the residual is H_k(X_t) - exp(-k alpha t) H_k(X_0) with X_0
    from the given initial ensemble (stationary, or a fixed real); its mean
    vanishes, and the estimate comes back with a standard error so callers
    can assert |mean| <= 4 SE.
    """
    if not 1 <= mode <= spectrum.n_modes:
        raise ValueError("mode index out of range")
    if t < 0.0:
        raise ValueError("time must be nonnegative")
    alpha = float(spectrum.alphas[mode - 1])
    decay = math.exp(-k * alpha * t)
    rng = np.random.default_rng(seed)
    sums: list[float] = []
    sq_sums: list[float] = []
    done = 0
    while done < n_samples:
        take = min(BATCH_SIZE, n_samples - done)
        if isinstance(init, str) and init == "stationary":
            x0 = rng.standard_normal(take) / math.sqrt(alpha)
        else:
            x0 = np.full(take, float(init))
        z = rng.standard_normal(take)
        xt = ou_transition(alpha, t, x0, z)
        vals = hermite_eigenfunction(k, alpha, xt) - decay * hermite_eigenfunction(k, alpha, x0)
        sums.append(float(np.sum(vals)))
        sq_sums.append(float(np.sum(vals * vals)))
        done += take
    return batched_estimate(sums, sq_sums, n_samples, seed)


def ibp_check_many(u, v, modes, spectrum: Spectrum, basis: EigenBasis,
                   n_samples: int, seed: int,
                   ) -> list[tuple[MCEstimate, MCEstimate, float, bool]]:
    """Integration by parts of the invariant Gaussian, one result per mode.

    Both sides are estimated on common random numbers:

        lhs = E[ d_n U * V ],
        rhs = -E[ U * (d_n V - alpha_n c_n V) ],

    where U, V are the tangent lifts of u and v and d_n differentiates in the
    n-th mode coefficient.  The sample pass (the expensive part) is shared by
    all requested modes.  Each result is (lhs, rhs, diff_se, holds) with
    holds asserting |lhs - rhs| <= 4 * SE of the pathwise difference.
    """
    modes = list(modes)
    for mode in modes:
        if not 1 <= mode <= spectrum.n_modes:
            raise ValueError("mode index out of range")
    if spectrum.n_modes != basis.n_modes:
        raise ValueError("spectrum and basis must agree on the mode count")
    fu, fv = lift(u, basis), lift(v, basis)
    rng = np.random.default_rng(seed)
    acc = {m: [[], [], [], [], [], []] for m in modes}
    done = 0
    while done < n_samples:
        take = min(BATCH_SIZE, n_samples - done)
        coeffs = sample_coefficients(spectrum, rng, take)
        uv, ug = fu.values_and_grad_coeffs(coeffs)
        if fv is fu:
            vv, vg = uv, ug
        else:
            vv, vg = fv.values_and_grad_coeffs(coeffs)
        for mode in modes:
            alpha = float(spectrum.alphas[mode - 1])
            cn = coeffs[:, mode - 1]
            lhs_vals = ug[:, mode - 1] * vv
            rhs_vals = -uv * (vg[:, mode - 1] - alpha * cn * vv)
            diff = lhs_vals - rhs_vals
            slots = acc[mode]
            for idx, arr in enumerate((lhs_vals, rhs_vals, diff)):
                slots[2 * idx].append(float(np.sum(arr)))
                slots[2 * idx + 1].append(float(np.sum(arr * arr)))
        done += take
    out = []
    for mode in modes:
        slots = acc[mode]
        lhs = batched_estimate(slots[0], slots[1], n_samples, seed)
        rhs = batched_estimate(slots[2], slots[3], n_samples, seed)
        diff_est = batched_estimate(slots[4], slots[5], n_samples, seed)
        holds = (abs(diff_est.value) <= 4.0 * diff_est.std_error
                 or (diff_est.std_error == 0.0 and diff_est.value == 0.0))
        out.append((lhs, rhs, diff_est.std_error, bool(holds)))
    return out


def ibp_check(u, v, mode: int, spectrum: Spectrum, basis: EigenBasis,
              n_samples: int, seed: int,
              ) -> tuple[MCEstimate, MCEstimate, float, bool]:
    """Single-mode form of :func:`ibp_check_many`."""
    return ibp_check_many(u, v, [mode], spectrum, basis, n_samples, seed)[0]


@dataclass(frozen=True)
class InvarianceReport:
    """Per-functional two-sample KS statistics for the reference-change check."""

    names: tuple[str, ...]
    statistics: np.ndarray
    p_values: np.ndarray
    level: float
    holds: bool


def reference_invariance_check(base_a: BaseMeasure, base_b: DiscreteMeasure,
                               phi_star, phi_star_inv, spectrum: Spectrum,
                               n_modes: int, test_functionals, n: int, seed: int,
                               level: float = 0.01) -> InvarianceReport:
    """Invariance of the induced Gaussian law under a change of reference.

    Samples the law of mu(psi) for each test functional in two ways: directly
    from ``base_a`` with its cosine mode basis, and from ``base_b`` (the
    image of ``base_a`` under ``phi_star``) through the transported basis
    phi_n o phi_star_inv anchored at phi_star_inv.  The two samplers realize
    the same law; each functional is compared by a two-sample KS test at the
    Bonferroni-corrected level.
    """
    vals = np.asarray(phi_star(base_a.points1d), dtype=float)
    if np.any(np.diff(np.sort(vals)) <= 0.0):
        raise ValueError("transport map collides on the support; it must be invertible on atoms")
    if base_b.n_atoms != base_a.n_atoms:
        raise ValueError("reference measures must share the atom count")
    if not (np.array_equal(vals, base_b.points1d)
            and np.array_equal(base_a.weights, base_b.weights)):
        raise ValueError("base_b is not the exact image of base_a under the transport map")

    basis_a = eigenbasis_cosine(base_a, n_modes)
    rng_a = np.random.default_rng(np.random.SeedSequence([seed, 0]))
    rng_b = np.random.default_rng(np.random.SeedSequence([seed, 1]))
    coeffs_a = sample_coefficients(spectrum, rng_a, n)
    coeffs_b = sample_coefficients(spectrum, rng_b, n)

    # Route A: anchored sampling on base_a.
    pos_a = anchored_positions(basis_a, coeffs_a)
    # Route B: the transported modes phi_n o phi_star_inv on base_b's atoms,
    # anchored at the inverse map (the isometric image of route A's field).
    back = np.asarray(phi_star_inv(base_b.points1d), dtype=float)
    transported = np.empty((n_modes, base_b.n_atoms))
    for m in range(n_modes):
        if m == 0:
            transported[m] = 1.0
        else:
            transported[m] = np.sqrt(2.0) * np.cos(m * np.pi * back)
    pos_b = back + coeffs_b @ transported

    names, stats, pvals = [], [], []
    for psi in test_functionals:
        fa = (psi.fn(pos_a.reshape(-1, 1)).reshape(pos_a.shape)) @ base_a.weights
        fb = (psi.fn(pos_b.reshape(-1, 1)).reshape(pos_b.shape)) @ base_b.weights
        res = ks_2samp(fa, fb)
        names.append(psi.name)
        stats.append(float(res.statistic))
        pvals.append(float(res.pvalue))
    corrected = level / max(len(names), 1)
    holds = all(p >= corrected for p in pvals)
    return InvarianceReport(names=tuple(names), statistics=np.asarray(stats),
                            p_values=np.asarray(pvals), level=corrected,
                            holds=bool(holds))
