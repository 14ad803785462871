"""Monte Carlo Dirichlet-form energies on the image space.

The quadratic form of interest is the Gaussian average of the squared
gradient of the lifted functional,

    E(u, u) = E_c [ <Q grad(u o push)(c), grad(u o push)(c)> ],

with the gradient computed through the exact chain rule (never finite
differences inside the sampling loop).  The coefficient operator Q is the
identity (full L^2 norm of the gradient field), diagonal in the mode basis,
or a rank-one projection onto a fixed field.  Every comparison (bilinearity,
the eigenvalue sandwich, the contraction surrogate) is run on common random
numbers so inequalities hold pathwise up to CLT slack.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Sequence

import numpy as np
from scipy.linalg import eigh

from .lifted import BATCH_SIZE, LiftedFunctional, lift, sample_coefficients
from .measures import EigenBasis, TangentVector
from .spectral import Spectrum

__all__ = [
    "MCEstimate",
    "batched_estimate",
    "CoefficientField",
    "identity_coefficients",
    "diagonal_coefficients",
    "rank_one_coefficients",
    "form_energy_mc",
    "form_energy_pair_mc",
    "square_field",
    "energy_bound_check",
    "galerkin_eig_compare",
    "GalerkinComparison",
]


@dataclass(frozen=True)
class MCEstimate:
    """Monte Carlo mean with its CLT standard error; reproducible by seed."""

    value: float
    std_error: float
    n_samples: int
    seed: int

    def __post_init__(self) -> None:
        if self.std_error < 0.0:
            raise ValueError("standard error cannot be negative")


def batched_estimate(batch_sums: list[float], batch_sq_sums: list[float],
              n: int, seed: int) -> MCEstimate:
    total = math.fsum(batch_sums)
    total_sq = math.fsum(batch_sq_sums)
    mean = total / n
    var = max(total_sq / n - mean * mean, 0.0) * n / max(n - 1, 1)
    return MCEstimate(value=mean, std_error=math.sqrt(var / n), n_samples=n, seed=seed)


@dataclass(frozen=True)
class CoefficientField:
    """Diffusion coefficient acting on gradient fields.

    kind="identity": the plain squared L^2 norm of the gradient field.
    kind="diagonal": per-mode nonnegative factors q_1..q_M (modes beyond the
    truncation are annihilated).  kind="rank_one": projection onto a fixed
    field eta stored by its mode coefficients.
    """

    kind: str
    diag: np.ndarray | None = None
    eta_coeffs: np.ndarray | None = None

    def __post_init__(self) -> None:
        if self.kind not in ("identity", "diagonal", "rank_one"):
            raise ValueError(f"unknown coefficient kind {self.kind!r}")
        if self.kind == "diagonal":
            q = np.asarray(self.diag, dtype=float)
            if q.ndim != 1 or np.any(q < 0.0):
                raise ValueError("diagonal coefficients must be nonnegative")
            q = q.copy()
            q.setflags(write=False)
            object.__setattr__(self, "diag", q)
        if self.kind == "rank_one":
            e = np.asarray(self.eta_coeffs, dtype=float)
            if e.ndim != 1 or not np.all(np.isfinite(e)):
                raise ValueError("rank-one field needs finite coefficients")
            e = e.copy()
            e.setflags(write=False)
            object.__setattr__(self, "eta_coeffs", e)


def identity_coefficients() -> CoefficientField:
    return CoefficientField(kind="identity")


def diagonal_coefficients(q) -> CoefficientField:
    return CoefficientField(kind="diagonal", diag=q)


def rank_one_coefficients(eta, basis: EigenBasis | None = None) -> CoefficientField:
    """Rank-one coefficient from mode coefficients, or from a raw field via a
    Gram-corrected projection onto the basis."""
    if isinstance(eta, TangentVector):
        if eta.coeffs is not None:
            return CoefficientField(kind="rank_one", eta_coeffs=eta.coeffs)
        if basis is None:
            raise ValueError("projecting a raw field needs the basis")
        return CoefficientField(kind="rank_one", eta_coeffs=eta.to_coeffs(basis))
    return CoefficientField(kind="rank_one", eta_coeffs=np.asarray(eta, dtype=float))


def _gamma_pair(q: CoefficientField, basis: EigenBasis,
                fu: LiftedFunctional, fv: LiftedFunctional,
                coeffs: np.ndarray) -> np.ndarray:
    """Per-sample square field <Q grad u, grad v> on one coefficient batch."""
    if q.kind == "identity":
        gu = fu.grad_fields(coeffs)
        gv = gu if fv is fu else fv.grad_fields(coeffs)
        return (gu * gv) @ basis.base.weights
    if q.kind == "diagonal":
        gu = fu.grad_coeffs(coeffs)
        gv = gu if fv is fu else fv.grad_coeffs(coeffs)
        return (gu * gv) @ q.diag
    gu = fu.grad_coeffs(coeffs) @ q.eta_coeffs
    gv = gu if fv is fu else fv.grad_coeffs(coeffs) @ q.eta_coeffs
    return gu * gv


def square_field(u, v, phi_coeffs, q: CoefficientField, basis: EigenBasis) -> float:
    """Square field of (u, v) at the state with the given mode coefficients."""
    batch = np.atleast_2d(np.asarray(phi_coeffs, dtype=float))
    fu, fv = lift(u, basis), lift(v, basis)
    return float(_gamma_pair(q, basis, fu, fv, batch)[0])


def form_energy_pair_mc(u, v, q: CoefficientField, spectrum: Spectrum,
                        basis: EigenBasis, n_samples: int, seed: int) -> MCEstimate:
    """Bilinear energy E(u, v) estimated on a common Gaussian sample."""
    if n_samples < 2:
        raise ValueError("need at least two samples for a standard error")
    fu, fv = lift(u, basis), lift(v, basis)
    rng = np.random.default_rng(seed)
    sums: list[float] = []
    sq_sums: list[float] = []
    done = 0
    while done < n_samples:
        take = min(BATCH_SIZE, n_samples - done)
        coeffs = sample_coefficients(spectrum, rng, take)
        vals = _gamma_pair(q, basis, fu, fv, coeffs)
        sums.append(float(np.sum(vals)))
        sq_sums.append(float(np.sum(vals * vals)))
        done += take
    return batched_estimate(sums, sq_sums, n_samples, seed)


def form_energy_mc(u, q: CoefficientField, spectrum: Spectrum, basis: EigenBasis,
                   n_samples: int, seed: int) -> MCEstimate:
    """Quadratic energy E(u, u) with CLT standard error."""
    return form_energy_pair_mc(u, u, q, spectrum, basis, n_samples, seed)


def energy_bound_check(u, spectrum: Spectrum, basis: EigenBasis, C: float = 1.0,
                       n_samples: int = 100_000, seed: int = 0,
                       ) -> tuple[MCEstimate, float, bool]:
    """Check E(u,u) <= C * (declared uniform gradient bound)^2.

    Identity coefficients; since the Gaussian is a probability measure the
    bound holds with C = 1 whenever the declared bound really dominates the
    gradient.  Returns (energy estimate, bound, holds) with 4-sigma slack.
    """
    if C <= 0.0:
        raise ValueError("C must be positive")
    lifted = lift(u, basis)
    energy = form_energy_mc(lifted, identity_coefficients(), spectrum, basis,
                            n_samples, seed)
    if hasattr(lifted, "u"):
        bound = lifted.u.uniform_gradient_bound ** 2
    else:
        raise ValueError("the energy bound check needs a cylindrical function")
    # Rounding slack for the exact-equality boundary (e.g. unit gradients,
    # where the estimate equals the bound up to the weight-sum round-off).
    limit = C * bound * (1.0 + 1e-12) + 1e-15
    holds = energy.value - 4.0 * energy.std_error <= limit
    return energy, float(bound), bool(holds)


@dataclass(frozen=True)
class GalerkinComparison:
    """Ordered Rayleigh-Ritz values of the big and sub dictionaries plus the
    per-level sandwich check."""

    big_values: np.ndarray
    sub_values: np.ndarray
    slack: float
    holds: bool


def _accumulate_matrices(functions: Sequence[LiftedFunctional], basis: EigenBasis,
                         spectrum: Spectrum, n_samples: int, seed: int,
                         ) -> tuple[np.ndarray, np.ndarray, np.ndarray, np.ndarray]:
    """Stiffness/mass matrices over a shared sample, with entrywise SEs."""
    F = len(functions)
    w = basis.base.weights
    rng = np.random.default_rng(seed)
    k_sum = np.zeros((F, F))
    k_sq = np.zeros((F, F))
    m_sum = np.zeros((F, F))
    m_sq = np.zeros((F, F))
    # Smaller batches here: the (F, S, N) field stack dominates memory.
    batch = min(BATCH_SIZE, 2048)
    done = 0
    while done < n_samples:
        take = min(batch, n_samples - done)
        coeffs = sample_coefficients(spectrum, rng, take)
        vals = np.stack([f.values(coeffs) for f in functions])          # (F, S)
        fields = np.stack([f.grad_fields(coeffs) for f in functions])   # (F, S, N)
        m_batch = np.einsum("fs,gs->fgs", vals, vals)
        k_batch = np.einsum("fsn,n,gsn->fgs", fields, w, fields)
        m_sum += m_batch.sum(axis=2)
        m_sq += (m_batch ** 2).sum(axis=2)
        k_sum += k_batch.sum(axis=2)
        k_sq += (k_batch ** 2).sum(axis=2)
        done += take
    n = float(n_samples)
    mass = m_sum / n
    stiff = k_sum / n
    mass_se = np.sqrt(np.maximum(m_sq / n - mass ** 2, 0.0) / n)
    stiff_se = np.sqrt(np.maximum(k_sq / n - stiff ** 2, 0.0) / n)
    return stiff, mass, stiff_se, mass_se


def _pencil_eigenvalues(stiff: np.ndarray, mass: np.ndarray,
                        cond_cap: float) -> np.ndarray:
    cond = np.linalg.cond(mass)
    if not np.isfinite(cond) or cond > cond_cap:
        raise ValueError(
            f"mass matrix is numerically rank deficient (condition number {cond:.3e}, "
            f"cap {cond_cap:.1e}); choose an independent dictionary"
        )
    return eigh(stiff, mass, eigvals_only=True)


def galerkin_eig_compare(dictionary_big: Sequence, dictionary_sub: Sequence,
                         spectrum: Spectrum, basis: EigenBasis,
                         n_samples: int, seed: int,
                         cond_cap: float = 1e10) -> GalerkinComparison:
    """Rayleigh-Ritz eigenvalue sandwich on a shared Monte Carlo sample.

    Both dictionaries are evaluated on identical draws, so the sub span is an
    exact subspace of the big span in the empirical inner products and the
    ordered generalized eigenvalues must interlace: sub_n >= big_n for every
    level n.  The reported slack is the 4-sigma matrix-entry noise, which
    only guards the eigensolver itself.
    """
    if not dictionary_sub or len(dictionary_sub) > len(dictionary_big):
        raise ValueError("sub dictionary must be a nonempty subset of the big one")
    idx = []
    for f in dictionary_sub:
        hits = [i for i, g in enumerate(dictionary_big) if g is f]
        if not hits:
            name = getattr(f, "name", repr(f))
            raise ValueError(f"sub dictionary entry {name} is not in the big dictionary")
        idx.append(hits[0])
    big = [lift(f, basis) for f in dictionary_big]
    stiff, mass, stiff_se, mass_se = _accumulate_matrices(big, basis, spectrum,
                                                          n_samples, seed)
    big_vals = _pencil_eigenvalues(stiff, mass, cond_cap)
    sub_vals = _pencil_eigenvalues(stiff[np.ix_(idx, idx)], mass[np.ix_(idx, idx)],
                                   cond_cap)
    scale = 1.0 + np.abs(sub_vals).max()
    slack = 4.0 * float(stiff_se.max() + scale * mass_se.max())
    holds = bool(np.all(sub_vals >= big_vals[: len(sub_vals)] - slack))
    return GalerkinComparison(big_values=big_vals, sub_values=sub_vals,
                              slack=slack, holds=holds)
