"""Tangent lifts: functionals of the mode coefficients with exact gradients.

The simulated state is the anchored transport field

    phi_c = id + sum_n c_n phi_n,

so that c = 0 pushes the reference measure to itself and the coefficient
vector c carries the product Gaussian law with per-mode variance 1/alpha_n.
A lifted functional is a smooth function of c together with its gradient,
reported both as the coefficient vector (d/dc_n) and as the gradient field
on the support of the reference measure.  For a cylindrical u composed with
the push-forward, the gradient field is the intrinsic gradient of u at the
image measure evaluated along the pushed atoms (the chain rule), and its
n-th coefficient is the pairing with the n-th basis field; no finite
differences are used.
"""

from __future__ import annotations

import numpy as np

from .calculus import CylindricalFunction
from .measures import DiscreteMeasure, EigenBasis
from .spectral import Spectrum, hermite_eigenfunction, hermite_eigenfunction_deriv

__all__ = [
    "LiftedFunctional",
    "LiftedCylindrical",
    "CoefficientFunctional",
    "HermiteModeFunctional",
    "ConstantFunctional",
    "lift",
    "sample_coefficients",
    "anchored_positions",
    "pushed_measure",
    "BATCH_SIZE",
]

# Fixed Monte Carlo batch size so accumulation order (and the bit pattern of
# every estimate) does not depend on the caller.
BATCH_SIZE = 16384


def sample_coefficients(spectrum: Spectrum, rng: np.random.Generator, n: int) -> np.ndarray:
    """n independent draws of the mode coefficient vector, shape (n, M)."""
    z = rng.standard_normal((n, spectrum.n_modes))
    return z / np.sqrt(spectrum.alphas)


def anchored_positions(basis: EigenBasis, coeffs: np.ndarray) -> np.ndarray:
    """Atom positions of the anchored field id + sum_n c_n phi_n.

    ``coeffs`` may be a single vector (M,) or a batch (S, M); the result has
    shape (N,) respectively (S, N).
    """
    base = basis.base
    return base.points1d + np.asarray(coeffs, dtype=float) @ basis.values


def pushed_measure(basis: EigenBasis, coeffs: np.ndarray) -> DiscreteMeasure:
    """Image measure of the anchored field for one coefficient vector."""
    return DiscreteMeasure(points=anchored_positions(basis, coeffs),
                           weights=basis.base.weights)


class LiftedFunctional:
    """Smooth functional of the mode coefficients with exact gradients.

    Subclasses implement batched evaluation: ``values`` maps a coefficient
    batch (S, M) to (S,), ``grad_fields`` to the gradient fields (S, N) on
    the support, and ``grad_coeffs`` to the per-mode partials (S, M).
    """

    name = "lifted"

    def values(self, coeffs: np.ndarray) -> np.ndarray:
        raise NotImplementedError

    def grad_fields(self, coeffs: np.ndarray) -> np.ndarray:
        raise NotImplementedError

    def grad_coeffs(self, coeffs: np.ndarray) -> np.ndarray:
        """Partials d/dc_n: the pairing of the gradient field with each mode."""
        basis = self.basis
        return self.grad_fields(coeffs) @ (basis.base.weights[:, None] * basis.values.T)

    def values_and_grad_coeffs(self, coeffs: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
        return self.values(coeffs), self.grad_coeffs(coeffs)


class LiftedCylindrical(LiftedFunctional):
    """u composed with the anchored push-forward, for cylindrical u."""

    def __init__(self, u: CylindricalFunction, basis: EigenBasis):
        self.u = u
        self.basis = basis
        self.name = u.name

    def _stats(self, positions: np.ndarray) -> np.ndarray:
        # positions (S, N) -> statistics (S, n_tests); tests act on (K, 1) points.
        w = self.basis.base.weights
        flat = positions.reshape(-1, 1)
        cols = [t.fn(flat).reshape(positions.shape) @ w for t in self.u.tests]
        return np.stack(cols, axis=1)

    def values(self, coeffs: np.ndarray) -> np.ndarray:
        positions = anchored_positions(self.basis, coeffs)
        stats = self._stats(positions)
        return np.array([self.u.outer.fn(row) for row in stats])

    def grad_fields(self, coeffs: np.ndarray) -> np.ndarray:
        positions = anchored_positions(self.basis, coeffs)
        return self._grad_fields_at(positions)

    def _grad_fields_at(self, positions: np.ndarray) -> np.ndarray:
        stats = self._stats(positions)
        partials = np.array([self.u.outer.grad(row) for row in stats])
        flat = positions.reshape(-1, 1)
        out = np.zeros_like(positions)
        for j, t in enumerate(self.u.tests):
            out += partials[:, j][:, None] * t.grad(flat)[:, 0].reshape(positions.shape)
        return out

    def values_and_grad_coeffs(self, coeffs: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
        positions = anchored_positions(self.basis, coeffs)
        stats = self._stats(positions)
        vals = np.array([self.u.outer.fn(row) for row in stats])
        fields = self._grad_fields_at(positions)
        basis = self.basis
        grads = fields @ (basis.base.weights[:, None] * basis.values.T)
        return vals, grads


class CoefficientFunctional(LiftedFunctional):
    """The n-th coefficient functional c -> c_n; its gradient field is the
    n-th basis field."""

    def __init__(self, mode: int, basis: EigenBasis):
        if not 1 <= mode <= basis.n_modes:
            raise ValueError("mode index out of range")
        self.mode = mode
        self.basis = basis
        self.name = f"coeff[{mode}]"

    def values(self, coeffs: np.ndarray) -> np.ndarray:
        return np.asarray(coeffs, dtype=float)[:, self.mode - 1]

    def grad_fields(self, coeffs: np.ndarray) -> np.ndarray:
        S = np.asarray(coeffs).shape[0]
        return np.broadcast_to(self.basis.values[self.mode - 1], (S, self.basis.base.n_atoms)).copy()

    def grad_coeffs(self, coeffs: np.ndarray) -> np.ndarray:
        out = np.zeros_like(np.asarray(coeffs, dtype=float))
        out[:, self.mode - 1] = 1.0
        return out


class HermiteModeFunctional(LiftedFunctional):
    """Orthonormal Hermite function of one mode coefficient: an exact
    eigenfunction of the mode generator with eigenvalue k * alpha_n."""

    def __init__(self, mode: int, degree: int, spectrum: Spectrum, basis: EigenBasis):
        if not 1 <= mode <= basis.n_modes:
            raise ValueError("mode index out of range")
        if spectrum.n_modes != basis.n_modes:
            raise ValueError("spectrum and basis must agree on the mode count")
        self.mode = mode
        self.degree = degree
        self.alpha = float(spectrum.alphas[mode - 1])
        self.basis = basis
        self.name = f"hermite[{degree};{mode}]"

    def values(self, coeffs: np.ndarray) -> np.ndarray:
        c = np.asarray(coeffs, dtype=float)[:, self.mode - 1]
        return hermite_eigenfunction(self.degree, self.alpha, c)

    def grad_fields(self, coeffs: np.ndarray) -> np.ndarray:
        c = np.asarray(coeffs, dtype=float)[:, self.mode - 1]
        slope = hermite_eigenfunction_deriv(self.degree, self.alpha, c)
        return slope[:, None] * self.basis.values[self.mode - 1]


class ConstantFunctional(LiftedFunctional):
    """Constant functional with vanishing gradient."""

    def __init__(self, value: float, basis: EigenBasis):
        self.value = float(value)
        self.basis = basis
        self.name = f"const[{value}]"

    def values(self, coeffs: np.ndarray) -> np.ndarray:
        return np.full(np.asarray(coeffs).shape[0], self.value)

    def grad_fields(self, coeffs: np.ndarray) -> np.ndarray:
        return np.zeros((np.asarray(coeffs).shape[0], self.basis.base.n_atoms))

    def grad_coeffs(self, coeffs: np.ndarray) -> np.ndarray:
        return np.zeros_like(np.asarray(coeffs, dtype=float))


def lift(u, basis: EigenBasis) -> LiftedFunctional:
    """Wrap a cylindrical function as a lifted functional; lifted functionals
    pass through unchanged."""
    if isinstance(u, LiftedFunctional):
        return u
    if isinstance(u, CylindricalFunction):
        return LiftedCylindrical(u, basis)
    raise TypeError(f"cannot lift {type(u).__name__}")
